#pragma once

#include <string>
#include <vector>

#include "msmseg/ops.hpp"
#include "msmseg/rng.hpp"

namespace msmseg {
namespace nn {

/// Named parameter registry; the canonical ordering for the optimizer,
/// checkpoints, and init (insertion order == init order).
struct ParamRegistry {
    std::vector<std::pair<std::string, Var>> params;

    Var add(const std::string& name, Var v) {
        params.emplace_back(name, v);
        return v;
    }
};

/// Fan-in-scaled uniform init: U(-sqrt(3/fan_in), sqrt(3/fan_in)); biases and
/// norm offsets start at zero, norm scales at one.
Tensor init_uniform(Rng& rng, std::vector<int> shape, int fan_in);

struct Conv2d {
    Var w, b;
    int stride = 1, pad = 1;

    static Conv2d make(ParamRegistry& reg, Rng& rng, const std::string& name, int ci, int co,
                       int k, int stride, int pad, bool trainable = true);
    Var operator()(const Var& x) const { return ops::conv2d(x, w, b, stride, pad); }
};

struct ChannelNorm {
    Var gamma, beta;

    static ChannelNorm make(ParamRegistry& reg, const std::string& name, int c,
                            bool trainable = true);
    Var operator()(const Var& x) const { return ops::channel_norm(x, gamma, beta); }
};

struct Linear {
    Var w, b;  // w: [in, out]

    static Linear make(ParamRegistry& reg, Rng& rng, const std::string& name, int in, int out,
                       bool trainable = true);
    Var operator()(const Var& x) const { return ops::add_bias_rows(ops::matmul(x, w), b); }
};

struct LayerNorm {
    Var gamma, beta;

    static LayerNorm make(ParamRegistry& reg, const std::string& name, int d,
                          bool trainable = true);
    Var operator()(const Var& x) const { return ops::layer_norm_rows(x, gamma, beta); }
};

/// Multi-head attention over token matrices. When `attn_sink` is non-null the
/// per-head softmax probability matrices are appended to it (diagnostics).
struct Mha {
    Linear q, k, v, o;
    int heads = 1;

    static Mha make(ParamRegistry& reg, Rng& rng, const std::string& name, int d, int heads,
                    bool trainable = true);
    Var operator()(const Var& queries, const Var& keys, const Var& values,
                   std::vector<Tensor>* attn_sink = nullptr) const;
};

struct Mlp {
    Linear fc1, fc2;

    static Mlp make(ParamRegistry& reg, Rng& rng, const std::string& name, int d, int hidden,
                    int out, bool trainable = true);
    Var operator()(const Var& x) const { return fc2(ops::silu(fc1(x))); }
};

/// Fixed 2-D sinusoidal positional encoding, shape [h*w, d]; d must be a
/// multiple of 4 (half the channels encode y, half encode x).
Tensor sinusoidal_pe_2d(int h, int w, int d);

}  // namespace nn
}  // namespace msmseg
