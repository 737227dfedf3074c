#pragma once

#include <vector>

#include "msmseg/autodiff.hpp"

namespace msmseg {
namespace ops {

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var silu(const Var& x);
Var sigmoid(const Var& x);
Var logv(const Var& x);
Var clamp(const Var& x, double lo, double hi);

// ---- [C,h,w] helpers ----
/// x [C,h,w] + b [1,h,w] broadcast over channels.
Var add_broadcast_channel(const Var& x, const Var& b);
/// x [C,h,w] * w [1,h,w] broadcast over channels.
Var mul_broadcast_channel(const Var& x, const Var& w);
/// x scaled by a scalar Var (shape [1]).
Var scale_by_scalar(const Var& x, const Var& s);
Var slice_channels(const Var& x, int c0, int c1);
Var concat_chw(const std::vector<Var>& xs);

// ---- token matrices [N,D] ----
Var matmul(const Var& a, const Var& b);
/// x [N,M] + b [M] broadcast over rows.
Var add_bias_rows(const Var& x, const Var& b);
Var transpose2(const Var& a);
Var slice_cols(const Var& a, int c0, int c1);
Var slice_rows(const Var& a, int r0, int r1);
Var concat_cols(const std::vector<Var>& xs);
Var concat_rows(const std::vector<Var>& xs);
Var softmax_rows(const Var& x);
/// Per-row layer norm with per-column scale/offset.
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);

// ---- CHW <-> tokens ----
Var chw_to_tokens(const Var& x);                 // [C,h,w] -> [h*w, C]
Var tokens_to_chw(const Var& x, int h, int w);   // [h*w, C] -> [C,h,w]

// ---- spatial ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var upsample_bilinear(const Var& x, int out_h, int out_w);
/// Per-position normalization across channels with per-channel scale/offset.
Var channel_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);
/// Softmax across the channel axis at each spatial position.
Var softmax_channel(const Var& x);
/// out[k,y,x] = sum_d pix[d,y,x] * emb[k,d]
Var mask_logits(const Var& pix, const Var& emb);
/// out[0,y,x] = probs[labels(y,x), y, x]; labels is a constant [H,W] tensor of class ids.
Var select_channel_by_label(const Var& probs, const Tensor& labels);

// ---- reductions ----
Var sum(const Var& x);
Var mean(const Var& x);

/// Same element count, new shape; gradient is identity.
Var reshape(const Var& x, std::vector<int> shape);

// ---- plain-tensor utilities (no tape) ----
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);  // [C,h,w]
void check_finite(const Tensor& t, const char* what);

}  // namespace ops
}  // namespace msmseg
