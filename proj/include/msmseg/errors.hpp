#pragma once

#include <stdexcept>
#include <string>

namespace msmseg {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("ConfigError: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("ShapeError: " + msg) {}
};

struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& msg) : std::runtime_error("NonFiniteError: " + msg) {}
};

struct PromptModeError : std::runtime_error {
    explicit PromptModeError(const std::string& msg) : std::runtime_error("PromptModeError: " + msg) {}
};

struct EmptySubsetError : std::runtime_error {
    explicit EmptySubsetError(const std::string& msg) : std::runtime_error("EmptySubsetError: " + msg) {}
};

struct PermutationError : std::runtime_error {
    explicit PermutationError(const std::string& msg) : std::runtime_error("PermutationError: " + msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error("DivergenceError: " + msg) {}
};

struct UnknownLabelError : std::runtime_error {
    explicit UnknownLabelError(const std::string& msg) : std::runtime_error("UnknownLabelError: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("IoError: " + msg) {}
};

struct ManifestMismatchError : std::runtime_error {
    explicit ManifestMismatchError(const std::string& msg)
        : std::runtime_error("ManifestMismatchError: " + msg) {}
};

struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& msg) : std::runtime_error("SpecError: " + msg) {}
};

}  // namespace msmseg
