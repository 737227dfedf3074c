#pragma once

#include "msmseg/config.hpp"
#include "msmseg/nn.hpp"

namespace msmseg {

/// Encoder outputs {F_i}: level i has shape [C_i, H/2^(i+1), W/2^(i+1)] with
/// channels doubling up to C at the coarsest level. levels.back() is the image
/// embedding F consumed by memory attention.
struct FeaturePyramid {
    std::vector<Var> levels;

    const Var& embedding() const { return levels.back(); }
};

/// Small strided convolutional pyramid standing in for the pretrained image
/// encoder: per stage one 3x3 stride-2 conv + norm + SiLU, then a 3x3
/// stride-1 residual block.
struct EncoderWeights {
    struct Stage {
        nn::Conv2d down;
        nn::ChannelNorm norm;
        nn::Conv2d res_a;
        nn::ChannelNorm res_norm;
        nn::Conv2d res_b;
    };
    std::vector<Stage> stages;

    static EncoderWeights make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                               const std::string& prefix = "encoder");
};

/// Convenience init with a standalone registry (tests, checksums).
EncoderWeights init_encoder(const ModelConfig& cfg, std::uint64_t seed,
                            nn::ParamRegistry* reg = nullptr);

/// Encode one modality slice [1,H,W] into the feature pyramid.
FeaturePyramid encode(const Var& slice, const EncoderWeights& weights, const ModelConfig& cfg);

}  // namespace msmseg
