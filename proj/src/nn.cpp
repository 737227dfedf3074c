#include "msmseg/nn.hpp"

#include <cmath>

namespace msmseg {
namespace nn {

Tensor init_uniform(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    const double s = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
    return t;
}

Conv2d Conv2d::make(ParamRegistry& reg, Rng& rng, const std::string& name, int ci, int co, int k,
                    int stride, int pad, bool trainable) {
    Conv2d c;
    c.w = reg.add(name + ".w", Var::leaf(init_uniform(rng, {co, ci, k, k}, ci * k * k), trainable));
    c.b = reg.add(name + ".b", Var::leaf(Tensor::zeros({co}), trainable));
    c.stride = stride;
    c.pad = pad;
    return c;
}

ChannelNorm ChannelNorm::make(ParamRegistry& reg, const std::string& name, int c, bool trainable) {
    ChannelNorm n;
    n.gamma = reg.add(name + ".gamma", Var::leaf(Tensor::full({c}, 1.0), trainable));
    n.beta = reg.add(name + ".beta", Var::leaf(Tensor::zeros({c}), trainable));
    return n;
}

Linear Linear::make(ParamRegistry& reg, Rng& rng, const std::string& name, int in, int out,
                    bool trainable) {
    Linear l;
    l.w = reg.add(name + ".w", Var::leaf(init_uniform(rng, {in, out}, in), trainable));
    l.b = reg.add(name + ".b", Var::leaf(Tensor::zeros({out}), trainable));
    return l;
}

LayerNorm LayerNorm::make(ParamRegistry& reg, const std::string& name, int d, bool trainable) {
    LayerNorm n;
    n.gamma = reg.add(name + ".gamma", Var::leaf(Tensor::full({d}, 1.0), trainable));
    n.beta = reg.add(name + ".beta", Var::leaf(Tensor::zeros({d}), trainable));
    return n;
}

Mha Mha::make(ParamRegistry& reg, Rng& rng, const std::string& name, int d, int heads,
              bool trainable) {
    Mha m;
    m.q = Linear::make(reg, rng, name + ".q", d, d, trainable);
    m.k = Linear::make(reg, rng, name + ".k", d, d, trainable);
    m.v = Linear::make(reg, rng, name + ".v", d, d, trainable);
    m.o = Linear::make(reg, rng, name + ".o", d, d, trainable);
    m.heads = heads;
    return m;
}

Var Mha::operator()(const Var& queries, const Var& keys, const Var& values,
                    std::vector<Tensor>* attn_sink) const {
    const int d = queries.shape()[1];
    if (d % heads != 0) throw ShapeError("Mha: heads must divide d");
    const int hd = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Var qp = q(queries);
    Var kp = k(keys);
    Var vp = v(values);
    std::vector<Var> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = ops::slice_cols(qp, h * hd, (h + 1) * hd);
        Var kh = ops::slice_cols(kp, h * hd, (h + 1) * hd);
        Var vh = ops::slice_cols(vp, h * hd, (h + 1) * hd);
        Var scores = ops::scale(ops::matmul(qh, ops::transpose2(kh)), scale);
        Var probs = ops::softmax_rows(scores);
        if (attn_sink) attn_sink->push_back(probs.value());
        head_outs.push_back(ops::matmul(probs, vh));
    }
    return o(ops::concat_cols(head_outs));
}

Mlp Mlp::make(ParamRegistry& reg, Rng& rng, const std::string& name, int d, int hidden, int out,
              bool trainable) {
    Mlp m;
    m.fc1 = Linear::make(reg, rng, name + ".fc1", d, hidden, trainable);
    m.fc2 = Linear::make(reg, rng, name + ".fc2", hidden, out, trainable);
    return m;
}

Tensor sinusoidal_pe_2d(int h, int w, int d) {
    if (d % 4 != 0) throw ShapeError("sinusoidal_pe_2d: d must be a multiple of 4");
    Tensor pe({h * w, d});
    const int quarter = d / 4;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int row = y * w + x;
            for (int i = 0; i < quarter; ++i) {
                const double div = std::pow(10000.0, 2.0 * i / (d / 2.0));
                pe.at(row, 2 * i) = std::sin(y / div);
                pe.at(row, 2 * i + 1) = std::cos(y / div);
                pe.at(row, 2 * quarter + 2 * i) = std::sin(x / div);
                pe.at(row, 2 * quarter + 2 * i + 1) = std::cos(x / div);
            }
        }
    }
    return pe;
}

}  // namespace nn
}  // namespace msmseg
