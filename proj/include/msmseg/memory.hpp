#pragma once

#include <deque>

#include "msmseg/config.hpp"
#include "msmseg/nn.hpp"

namespace msmseg {

/// One encoded memory: V_{t,m} (modality) or U_t (slice). modality < 0 marks a
/// slice-level entry.
struct MemoryEntry {
    Tensor features;  // [D, emb_h, emb_w]
    int slice = -1;
    int modality = -1;
};

/// Bounded FIFO of memory entries, oldest first. Two instances realize the
/// slice bank (capacity n) and the modality bank (capacity k).
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(int capacity, std::vector<int> feature_shape)
        : capacity_(capacity), feature_shape_(std::move(feature_shape)) {}

    void push(MemoryEntry entry);
    std::vector<MemoryEntry> snapshot() const;
    void reset() { entries_.clear(); }
    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(entries_.size()); }
    bool empty() const { return entries_.empty(); }
    const std::deque<MemoryEntry>& entries() const { return entries_; }

private:
    int capacity_ = 0;
    std::vector<int> feature_shape_;
    std::deque<MemoryEntry> entries_;
};

/// Memory encoder f_modal / f_slice: class probabilities from the prediction
/// are projected and strided down to the embedding scale, concatenated with
/// the projected image embedding, and fused by one 3x3 conv. Entries are
/// consumed as constants downstream, so these weights stay at their init
/// (gradients never reach them) and are registered non-trainable.
struct MemoryEncoderWeights {
    nn::Conv2d mask_proj;               // 1x1, num_classes -> D/2
    std::vector<nn::Conv2d> down;       // levels x (3x3 stride-2, D/2 -> D/2)
    std::vector<nn::ChannelNorm> down_norm;
    nn::Conv2d emb_proj;                // 1x1, C -> D/2
    nn::Conv2d fuse;                    // 3x3, D -> D

    static MemoryEncoderWeights make(nn::ParamRegistry& reg, Rng& rng, const ModelConfig& cfg,
                                     const std::string& prefix);
};

MemoryEntry encode_modality_memory(const Tensor& pred_logits, const Tensor& embedding,
                                   const MemoryEncoderWeights& weights, const ModelConfig& cfg,
                                   int slice, int modality);

MemoryEntry encode_slice_memory(const Tensor& fused_logits, const Tensor& embedding,
                                const MemoryEncoderWeights& weights, const ModelConfig& cfg,
                                int slice);

}  // namespace msmseg
