#include "msmseg/memory.hpp"

namespace msmseg {

void MemoryBank::push(MemoryEntry entry) {
    if (!feature_shape_.empty() && entry.features.shape() != feature_shape_)
        throw ShapeError("MemoryBank::push: entry shape " +
                         Tensor::shape_str(entry.features.shape()) + " != bank shape " +
                         Tensor::shape_str(feature_shape_));
    if (capacity_ <= 0) return;
    if (static_cast<int>(entries_.size()) >= capacity_) entries_.pop_front();
    entries_.push_back(std::move(entry));
}

std::vector<MemoryEntry> MemoryBank::snapshot() const {
    return {entries_.begin(), entries_.end()};
}

MemoryEncoderWeights MemoryEncoderWeights::make(nn::ParamRegistry& reg, Rng& rng,
                                                const ModelConfig& cfg,
                                                const std::string& prefix) {
    MemoryEncoderWeights w;
    const int half = cfg.D / 2;
    w.mask_proj = nn::Conv2d::make(reg, rng, prefix + ".mask_proj", cfg.num_classes, half, 1, 1, 0,
                                   /*trainable=*/false);
    for (int s = 0; s < cfg.levels; ++s) {
        w.down.push_back(nn::Conv2d::make(reg, rng, prefix + ".down" + std::to_string(s), half,
                                          half, 3, 2, 1, /*trainable=*/false));
        w.down_norm.push_back(nn::ChannelNorm::make(reg, prefix + ".down_norm" + std::to_string(s),
                                                    half, /*trainable=*/false));
    }
    w.emb_proj = nn::Conv2d::make(reg, rng, prefix + ".emb_proj", cfg.C, half, 1, 1, 0,
                                  /*trainable=*/false);
    w.fuse = nn::Conv2d::make(reg, rng, prefix + ".fuse", 2 * half, cfg.D, 3, 1, 1,
                              /*trainable=*/false);
    return w;
}

namespace {

Tensor run_memory_encoder(const Tensor& logits, const Tensor& embedding,
                          const MemoryEncoderWeights& w, const ModelConfig& cfg) {
    check_shape(logits, {cfg.num_classes, cfg.H, cfg.W}, "memory encoder logits");
    check_shape(embedding, {cfg.C, cfg.emb_h(), cfg.emb_w()}, "memory encoder embedding");
    Var x = ops::softmax_channel(Var::constant(logits));
    x = w.mask_proj(x);
    for (std::size_t s = 0; s < w.down.size(); ++s)
        x = ops::silu(w.down_norm[s](w.down[s](x)));
    Var e = w.emb_proj(Var::constant(embedding));
    Var fused = w.fuse(ops::concat_chw({x, e}));
    ops::check_finite(fused.value(), "memory entry features");
    return fused.value();
}

}  // namespace

MemoryEntry encode_modality_memory(const Tensor& pred_logits, const Tensor& embedding,
                                   const MemoryEncoderWeights& weights, const ModelConfig& cfg,
                                   int slice, int modality) {
    return MemoryEntry{run_memory_encoder(pred_logits, embedding, weights, cfg), slice, modality};
}

MemoryEntry encode_slice_memory(const Tensor& fused_logits, const Tensor& embedding,
                                const MemoryEncoderWeights& weights, const ModelConfig& cfg,
                                int slice) {
    return MemoryEntry{run_memory_encoder(fused_logits, embedding, weights, cfg), slice, -1};
}

}  // namespace msmseg
