#pragma once

#include "msmseg/config.hpp"
#include "msmseg/nn.hpp"

namespace msmseg {

/// Modality-adaptive fusion decoder: per-modality mask decoding from
/// H = Z (+) P with a two-way attention stack, a shared pixel decoder, and a
/// per-voxel softmax fusion across modalities.
struct DecoderWeights {
    struct TwoWayBlock {
        nn::Mha self_q;
        nn::LayerNorm ln_self;
        nn::Mha q_to_t;
        nn::LayerNorm ln_q2t;
        nn::Mlp mlp;
        nn::LayerNorm ln_mlp;
        nn::Mha t_to_q;
        nn::LayerNorm ln_t2q;
    };
    struct PixStage {
        nn::Conv2d conv;
        nn::ChannelNorm norm;
    };

    std::vector<TwoWayBlock> blocks;       // shared attention stack
    std::vector<PixStage> pixel_decoder;   // shared, upsamples x2^levels
    std::vector<Var> query_embeddings;     // per modality, [num_queries+num_classes, D]
    std::vector<nn::Mlp> class_mlp;        // per modality, D -> pixel feature dim
    nn::Conv2d fusion_score;               // 1x1, D -> 1

    int pixel_dim = 0;

    static DecoderWeights make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                               const std::string& prefix = "decoder");
};

struct ModalityDecode {
    Var logits;   // [num_classes, H, W]
    Var h_feat;   // [D, emb_h, emb_w] refined embedding
    Var queries;  // [num_queries+num_classes, D] refined query embedding
};

/// Decode one modality: H = Z broadcast-plus P, refined jointly with the
/// query embedding, then per-pixel inner product between upsampled pixel
/// features and the class-token embeddings.
ModalityDecode decode_modality(const Var& z, const Var& guidance, const DecoderWeights& w,
                               const ModelConfig& cfg, int modality);

struct FusionResult {
    Var fused_logits;     // [num_classes, H, W]
    Var fusion_weights;   // [M, H, W], softmax across modalities per voxel
};

FusionResult fuse_modalities(const std::vector<Var>& per_modality_logits,
                             const std::vector<Var>& h_feats, const DecoderWeights& w,
                             const ModelConfig& cfg);

/// Fusion restricted to a nonempty modality subset; softmax renormalizes over
/// the active set and inactive modalities get zero weight.
FusionResult subset_fusion(const std::vector<Var>& per_modality_logits,
                           const std::vector<Var>& h_feats, const std::vector<int>& active,
                           const DecoderWeights& w, const ModelConfig& cfg);

}  // namespace msmseg
