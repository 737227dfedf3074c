#pragma once

#include "msmseg/ops.hpp"
#include "msmseg/types.hpp"

namespace msmseg {

/// Scalar components of the training objective for one slice (or averaged
/// over a run). The identity total = l_prompt + mean(l_modal) + l_fusion is
/// exact by construction.
struct LossBreakdown {
    double l_prompt = 0.0;
    std::vector<double> l_modal;
    double l_fusion = 0.0;
    double total = 0.0;
};

LossBreakdown total_loss(double l_prompt, std::vector<double> l_modal, double l_fusion);

/// Mean binary cross-entropy between guidance P (values in (0,1)) and a
/// binary low-resolution whole-tumor mask.
Var loss_prompt(const Var& guidance, const Tensor& gt_lowres);

/// Soft Dice (classes excluding background, smooth eps=1) plus focal loss
/// (gamma=2, alpha=0.25) on softmax probabilities. `gt_slice` is [H,W] labels.
Var loss_seg(const Var& logits, const Tensor& gt_slice, int num_classes);

/// Whole-tumor union of {ET, NETC, SNFH} for slice t, downsampled by `factor`
/// with nearest-neighbor center sampling; binary [1, H/factor, W/factor].
Tensor whole_tumor_lowres(const LabelVolume& labels, int t, int factor);

/// Labels of slice t as a [H,W] tensor (class ids as doubles).
Tensor label_slice(const LabelVolume& labels, int t);

}  // namespace msmseg
