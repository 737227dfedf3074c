#pragma once

#include <optional>

#include "msmseg/encoder.hpp"
#include "msmseg/types.hpp"

namespace msmseg {

/// Box prompt rasterized at every pyramid scale; values in [0,1].
struct PromptPyramid {
    std::vector<Tensor> maps;  // l maps, map i is [1, H/2^(i+1), W/2^(i+1)]
};

/// Fine-to-coarse fusion of pyramid features with optional prompt channels,
/// ending at the embedding scale where Z joins; the guidance head squashes to
/// a whole-tumor probability map P.
struct McpWeights {
    std::vector<nn::Conv2d> proj;       // per level, 1x1 back to that level's width
    std::vector<nn::ChannelNorm> proj_norm;
    std::vector<nn::Conv2d> down;       // stride-2 3x3 aligning the running fusion
    std::vector<nn::ChannelNorm> down_norm;
    nn::Conv2d ds_a, ds_b, ds_c;        // two 3x3 then one 1x1
    nn::ChannelNorm ds_a_norm, ds_b_norm;
    nn::Conv2d head;                    // 1x1 -> 1 channel

    static McpWeights make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                           const std::string& prefix = "mcp");
};

/// Rasterize a box prompt across all l scales by bilinear interpolation of the
/// full-resolution binary box mask. Throws PromptModeError in automatic mode.
PromptPyramid translate_prompt(const PromptInput& prompt, const ModelConfig& cfg);

/// Tumor-region guidance P [1, emb_h, emb_w], strictly inside (0,1). When
/// `prompt` is absent the prompt channels are zero and the output keeps the
/// same shape (the no-prompt branch of the fusion recursion).
Var fuse_and_guide(const FeaturePyramid& pyramid, const Var& z,
                   const std::optional<PromptPyramid>& prompt, const McpWeights& w,
                   const ModelConfig& cfg);

}  // namespace msmseg
