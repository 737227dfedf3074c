#pragma once

#include <filesystem>

#include "msmseg/synthetic.hpp"

namespace msmseg {

/// On-disk case: a JSON manifest plus raw little-endian arrays — float32
/// [T,H,W] per modality and uint8 [T,H,W] labels.
struct Case {
    std::string name;
    MultiModalVolume volume;
    std::optional<LabelVolume> labels;
    VolumePrompts boxes;
    std::uint64_t seed = 0;
};

/// Writes manifest.json and the raw arrays into `dir`; returns the manifest path.
std::filesystem::path write_case(const Case& c, const std::filesystem::path& dir);

/// Loads a case from its manifest; throws IoError on missing files and
/// ManifestMismatchError when declared dims disagree with the file contents.
Case read_case(const std::filesystem::path& manifest_path);

/// Case wrapper for a generated phantom.
Case to_case(const GeneratedCase& g, std::string name);

/// Expand a shell-style glob into sorted paths (used by the CLI --cases flag).
std::vector<std::filesystem::path> glob_paths(const std::string& pattern);

}  // namespace msmseg
