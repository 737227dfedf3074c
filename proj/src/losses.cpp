#include "msmseg/losses.hpp"

namespace msmseg {

namespace {
constexpr double kProbEps = 1e-12;
constexpr double kDiceSmooth = 1.0;
constexpr double kFocalAlpha = 0.25;
}  // namespace

LossBreakdown total_loss(double l_prompt, std::vector<double> l_modal, double l_fusion) {
    LossBreakdown b;
    b.l_prompt = l_prompt;
    b.l_modal = std::move(l_modal);
    b.l_fusion = l_fusion;
    double modal_mean = 0.0;
    if (!b.l_modal.empty()) {
        for (double v : b.l_modal) modal_mean += v;
        modal_mean /= static_cast<double>(b.l_modal.size());
    }
    b.total = b.l_prompt + modal_mean + b.l_fusion;
    return b;
}

Var loss_prompt(const Var& guidance, const Tensor& gt_lowres) {
    if (guidance.shape() != gt_lowres.shape())
        throw ShapeError("loss_prompt: guidance and target shapes differ");
    Var p = ops::clamp(guidance, kProbEps, 1.0 - kProbEps);
    Var g = Var::constant(gt_lowres);
    Tensor one_minus_g = gt_lowres;
    for (std::int64_t i = 0; i < one_minus_g.size(); ++i) one_minus_g[i] = 1.0 - one_minus_g[i];
    Var pos = ops::mul(g, ops::logv(p));
    Var neg = ops::mul(Var::constant(one_minus_g), ops::logv(ops::add_const(ops::scale(p, -1.0), 1.0)));
    return ops::scale(ops::mean(ops::add(pos, neg)), -1.0);
}

Var loss_seg(const Var& logits, const Tensor& gt_slice, int num_classes) {
    if (logits.value().ndim() != 3 || logits.shape()[0] != num_classes)
        throw ShapeError("loss_seg: logits must be [num_classes,H,W]");
    const int h = logits.shape()[1], w = logits.shape()[2];
    if (gt_slice.ndim() != 2 || gt_slice.dim(0) != h || gt_slice.dim(1) != w)
        throw ShapeError("loss_seg: ground truth must be [H,W]");

    Var probs = ops::softmax_channel(logits);

    // Soft Dice over foreground classes.
    Var dice_acc;
    for (int c = 1; c < num_classes; ++c) {
        Tensor mask({1, h, w});
        double gsum = 0.0;
        for (int i = 0; i < h * w; ++i) {
            const double hit = (static_cast<int>(gt_slice[i]) == c) ? 1.0 : 0.0;
            mask[i] = hit;
            gsum += hit;
        }
        Var pc = ops::slice_channels(probs, c, c + 1);
        Var inter = ops::sum(ops::mul(pc, Var::constant(mask)));
        Var psum = ops::sum(pc);
        Var score = ops::div(ops::add_const(ops::scale(inter, 2.0), kDiceSmooth),
                             ops::add_const(psum, gsum + kDiceSmooth));
        Var loss_c = ops::add_const(ops::scale(score, -1.0), 1.0);
        dice_acc = dice_acc.defined() ? ops::add(dice_acc, loss_c) : loss_c;
    }
    Var dice_loss = ops::scale(dice_acc, 1.0 / static_cast<double>(num_classes - 1));

    // Focal term on the probability assigned to the true class.
    Var pt = ops::clamp(ops::select_channel_by_label(probs, gt_slice), kProbEps, 1.0);
    Var one_minus_pt = ops::add_const(ops::scale(pt, -1.0), 1.0);
    Var focal_px = ops::mul(ops::mul(one_minus_pt, one_minus_pt), ops::scale(ops::logv(pt), -1.0));
    Var focal = ops::scale(ops::mean(focal_px), kFocalAlpha);

    return ops::add(dice_loss, focal);
}

Tensor whole_tumor_lowres(const LabelVolume& labels, int t, int factor) {
    const int h = labels.H / factor, w = labels.W / factor;
    Tensor out({1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sy = y * factor + factor / 2;
            const int sx = x * factor + factor / 2;
            out.at(0, y, x) = labels.at(t, sy, sx) != kBackground ? 1.0 : 0.0;
        }
    return out;
}

Tensor label_slice(const LabelVolume& labels, int t) {
    Tensor out({labels.H, labels.W});
    for (int y = 0; y < labels.H; ++y)
        for (int x = 0; x < labels.W; ++x) out[static_cast<std::int64_t>(y) * labels.W + x] =
            static_cast<double>(labels.at(t, y, x));
    return out;
}

}  // namespace msmseg
