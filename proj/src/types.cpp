#include "msmseg/types.hpp"

#include <algorithm>
#include <set>

namespace msmseg {

void MultiModalVolume::validate() const {
    if (data.ndim() != 4) throw ShapeError("volume data must be [T,M,H,W]");
    if (T() < 1 || M() < 1) throw ShapeError("volume needs T >= 1 and M >= 1");
    if (!data.all_finite()) throw NonFiniteError("volume intensities must be finite");
    for (double s : spacing)
        if (!(s > 0.0)) throw ConfigError("spacing components must be > 0");
    if (static_cast<int>(modality_order.size()) != M())
        throw ShapeError("modality_order length must equal M");
    std::set<std::string> uniq(modality_order.begin(), modality_order.end());
    if (static_cast<int>(uniq.size()) != M())
        throw ConfigError("modality_order tags must be unique");
}

Tensor MultiModalVolume::slice(int t, int m) const {
    Tensor s({1, H(), W()});
    for (int y = 0; y < H(); ++y)
        for (int x = 0; x < W(); ++x) s.at(0, y, x) = data.at(t, m, y, x);
    return s;
}

void LabelVolume::validate() const {
    if (labels.size() != static_cast<std::size_t>(T) * H * W)
        throw ShapeError("label buffer size does not match [T,H,W]");
    for (std::uint8_t v : labels)
        if (v > 3) throw UnknownLabelError("label value " + std::to_string(int(v)) + " not in {0,1,2,3}");
}

void PromptInput::validate(int H, int W) const {
    if (mode == PromptMode::kBox) {
        if (!box) throw PromptModeError("box mode requires a box");
        const Box& b = *box;
        if (!(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= W && 0 <= b.y0 && b.y0 < b.y1 && b.y1 <= H))
            throw PromptModeError("box coordinates must satisfy 0 <= x0 < x1 <= W, 0 <= y0 < y1 <= H");
    } else if (box) {
        throw PromptModeError("automatic mode must not carry a box");
    }
}

void SlicePrediction::validate(const ModelConfig& cfg) const {
    const std::vector<int> logit_shape{cfg.num_classes, cfg.H, cfg.W};
    if (static_cast<int>(per_modality_logits.size()) != cfg.M)
        throw ShapeError("expected one logit tensor per modality");
    for (const Tensor& t : per_modality_logits) {
        check_shape(t, logit_shape, "per_modality_logits");
        if (!t.all_finite()) throw NonFiniteError("per-modality logits");
    }
    check_shape(fusion_weights, {cfg.M, cfg.H, cfg.W}, "fusion_weights");
    check_shape(fused_logits, logit_shape, "fused_logits");
    check_shape(guidance, {1, cfg.emb_h(), cfg.emb_w()}, "guidance");
    if (!fusion_weights.all_finite() || !fused_logits.all_finite() || !guidance.all_finite())
        throw NonFiniteError("prediction fields");
    // Weights nonnegative and summing to 1 over the modality axis.
    const int hw = cfg.H * cfg.W;
    for (int i = 0; i < hw; ++i) {
        double s = 0.0;
        for (int m = 0; m < cfg.M; ++m) {
            double v = fusion_weights[static_cast<std::int64_t>(m) * hw + i];
            if (v < 0.0) throw NonFiniteError("fusion weight < 0");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw NonFiniteError("fusion weights do not sum to 1 at a pixel");
    }
    for (std::int64_t i = 0; i < guidance.size(); ++i)
        if (!(guidance[i] > 0.0 && guidance[i] < 1.0))
            throw NonFiniteError("guidance values must lie strictly in (0,1)");
}

std::vector<std::uint8_t> SlicePrediction::fused_labels() const {
    const int C = fused_logits.dim(0);
    const int hw = fused_logits.dim(1) * fused_logits.dim(2);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(hw));
    for (int i = 0; i < hw; ++i) {
        int best = 0;
        double bv = fused_logits[i];
        for (int c = 1; c < C; ++c) {
            double v = fused_logits[static_cast<std::int64_t>(c) * hw + i];
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

}  // namespace msmseg
