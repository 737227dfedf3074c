#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msmseg/config.hpp"
#include "msmseg/errors.hpp"
#include "msmseg/tensor.hpp"

namespace msmseg {

// Voxel labels.
inline constexpr int kBackground = 0;
inline constexpr int kEnhancingTumor = 1;     // ET
inline constexpr int kNonEnhancingCore = 2;   // NETC
inline constexpr int kFlairHyperintense = 3;  // SNFH

/// Input scan: T slices x M modalities x HxW normalized intensities.
struct MultiModalVolume {
    Tensor data;  // [T, M, H, W]
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // (sz, sy, sx) mm
    std::vector<std::string> modality_order;

    int T() const { return data.dim(0); }
    int M() const { return data.dim(1); }
    int H() const { return data.dim(2); }
    int W() const { return data.dim(3); }

    void validate() const;

    /// One modality slice as a [1,H,W] tensor.
    Tensor slice(int t, int m) const;
};

/// Voxel labels in {0=background, 1=ET, 2=NETC, 3=SNFH}.
struct LabelVolume {
    std::vector<std::uint8_t> labels;  // [T, H, W] row-major
    int T = 0, H = 0, W = 0;

    std::uint8_t at(int t, int y, int x) const {
        return labels[(static_cast<std::size_t>(t) * H + y) * W + x];
    }
    std::uint8_t& at(int t, int y, int x) {
        return labels[(static_cast<std::size_t>(t) * H + y) * W + x];
    }
    void validate() const;
};

/// Category-agnostic prompt: a whole-tumor box in edge coordinates, so the
/// box (x0,y0,x1,y1) covers pixel columns x0..x1-1 and rows y0..y1-1;
/// (0,0,W,H) covers the full image.
struct Box {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

enum class PromptMode { kBox, kAutomatic };

struct PromptInput {
    PromptMode mode = PromptMode::kAutomatic;
    std::optional<Box> box;

    static PromptInput automatic() { return PromptInput{}; }
    static PromptInput boxed(Box b) { return PromptInput{PromptMode::kBox, b}; }

    void validate(int H, int W) const;
};

/// Per-slice model output.
struct SlicePrediction {
    std::vector<Tensor> per_modality_logits;  // M x [num_classes, H, W], canonical order
    Tensor fusion_weights;                    // [M, H, W]
    Tensor fused_logits;                      // [num_classes, H, W]
    Tensor guidance;                          // [1, emb_h, emb_w], values in (0,1)

    void validate(const ModelConfig& cfg) const;

    /// Argmax labels of the fused logits.
    std::vector<std::uint8_t> fused_labels() const;
};

}  // namespace msmseg
