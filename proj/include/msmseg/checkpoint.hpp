#pragma once

#include <filesystem>

#include "msmseg/model.hpp"

namespace msmseg {

/// Named-tensor container with a version header and the model config embedded
/// as JSON; tensors are float64 little-endian and looked up by name on load.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelWeights& weights);

struct LoadedModel {
    ModelConfig cfg;
    std::shared_ptr<ModelWeights> weights;
};

/// Rebuilds the model from the embedded config, then overwrites every
/// parameter found by name. Unknown names in the file are ignored; a missing
/// or shape-mismatched parameter is an error.
LoadedModel load_checkpoint(const std::filesystem::path& path);

// ModelConfig <-> JSON (used by checkpoints and the CLI --config flag).
std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

}  // namespace msmseg
