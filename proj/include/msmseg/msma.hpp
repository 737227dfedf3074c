#pragma once

#include "msmseg/config.hpp"
#include "msmseg/memory.hpp"

namespace msmseg {

/// Modality-and-slice memory attention: the image embedding is split evenly
/// along channels, each half is up-projected and self-attended into a query
/// map, and each query map cross-attends into one memory bank. The two branch
/// outputs are summed into the memory-enhanced embedding Z.
struct MsmaWeights {
    struct Branch {
        nn::Conv2d phi;      // 1x1 up-projection C/2 -> D
        nn::Mha self_attn;
        nn::LayerNorm self_ln;
        nn::Mha cross_attn;
        nn::LayerNorm cross_ln;
    };
    Branch slice_branch;
    Branch modal_branch;

    static MsmaWeights make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                            const std::string& prefix = "msma");
};

/// Captured softmax rows from every attention call of one msma evaluation.
struct MsmaTrace {
    std::vector<Tensor> attention;
};

/// Channel split of Eq.-3 form: concatenating the halves reconstructs the
/// input exactly. Throws ShapeError on odd channel count.
std::pair<Var, Var> split_channels(const Var& f);

/// Self-attended query maps (Q_slice, Q_modal) as token matrices [h*w, D].
std::pair<Var, Var> msma_queries(const Var& f, const MsmaWeights& w, const ModelConfig& cfg);

/// Memory-enhanced embedding Z [D,h,w]. Empty contexts degrade gracefully:
/// that branch contributes its query map unchanged.
Var msma(const Var& f, const std::vector<MemoryEntry>& slice_ctx,
         const std::vector<MemoryEntry>& modal_ctx, const MsmaWeights& w,
         const ModelConfig& cfg, MsmaTrace* trace = nullptr);

}  // namespace msmseg
