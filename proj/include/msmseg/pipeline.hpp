#pragma once

#include <memory>

#include "msmseg/model.hpp"
#include "msmseg/types.hpp"

namespace msmseg {

/// Per-slice prompts for one volume; an entry in automatic mode means no box
/// for that slice.
struct VolumePrompts {
    std::vector<PromptInput> per_slice;

    static VolumePrompts automatic(int t_count) {
        VolumePrompts p;
        p.per_slice.assign(static_cast<std::size_t>(t_count), PromptInput::automatic());
        return p;
    }
    static VolumePrompts global_box(const Box& b, int t_count) {
        VolumePrompts p;
        p.per_slice.assign(static_cast<std::size_t>(t_count), PromptInput::boxed(b));
        return p;
    }
};

/// One inference/training session: the weight bundle plus both memory banks.
/// Strictly sequential over (t, m); distinct sessions are independent.
struct SessionState {
    ModelConfig cfg;
    std::shared_ptr<ModelWeights> weights;
    MemoryBank slice_bank;
    MemoryBank modality_bank;

    static SessionState make(const ModelConfig& cfg, std::shared_ptr<ModelWeights> weights);
    /// Clears both banks (start of a new volume).
    void reset_memory();
};

/// Var-level outputs of one slice pass, indexed in canonical modality order.
struct SliceRun {
    std::vector<Var> per_modality_logits;
    std::vector<Var> guidance;  // P per modality
    std::vector<Var> h_feats;
    Var fused_logits;
    Var fusion_weights;

    SlicePrediction to_prediction() const;
};

/// 0..M-1.
std::vector<int> canonical_order(int m_count);

/// Run one slice through Algorithm-1's inner loop (encode, retrieve, msma,
/// guide, decode, fuse) with both banks updated in place. `order[j]` is the
/// canonical modality index processed at position j.
SliceRun run_slice(const MultiModalVolume& volume, int t, const PromptInput& prompt,
                   SessionState& state, const std::vector<int>& order);

/// Full nested loop over slices and modalities.
std::vector<SlicePrediction> segment_volume(const MultiModalVolume& volume,
                                            const VolumePrompts& prompts, SessionState& state);

/// segment_volume with modalities visited in the given processing order;
/// outputs stay indexed in canonical order. Throws PermutationError if order
/// is not a permutation of 0..M-1.
std::vector<SlicePrediction> run_with_modality_order(const MultiModalVolume& volume,
                                                     const std::vector<int>& order,
                                                     const VolumePrompts& prompts,
                                                     SessionState& state);

}  // namespace msmseg
