#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msmseg {

/// Model hyperparameters. Defaults are the desk-scale 64x64 configuration;
/// 256x256 (the full-scale resolution) is also a valid config.
struct ModelConfig {
    int H = 64;
    int W = 64;
    int levels = 4;        // encoder depth l
    int C = 64;            // embedding channels at the coarsest scale (even)
    int D = 64;            // memory/decoder channel width
    int heads = 4;         // attention head count
    int M = 4;             // modality count
    int k = 3;             // modality-memory capacity
    int n = 7;             // slice-memory capacity
    int num_classes = 4;   // background, ET, NETC, SNFH
    int num_queries = 4;   // auxiliary query tokens per modality
    std::uint64_t seed = 0;
    bool per_voxel_fusion = true;  // false: scalar weight per modality (Eq. 9 literal form)

    /// Spatial size of the image embedding / memory features (H/16 at l=4).
    int emb_h() const { return H >> levels; }
    int emb_w() const { return W >> levels; }

    /// Channel count of pyramid level i (0-based; doubles up to C at the top).
    int level_channels(int i) const { return C >> (levels - 1 - i); }
    int level_h(int i) const { return H >> (i + 1); }
    int level_w(int i) const { return W >> (i + 1); }
};

/// Returns cfg unchanged iff every invariant holds; throws ConfigError naming
/// the violated invariant otherwise.
ModelConfig validate_config(const ModelConfig& cfg);

/// Canonical BraTS modality tags used by the synthetic generator and CLI.
const std::vector<std::string>& default_modality_order();

}  // namespace msmseg
