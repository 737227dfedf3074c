#include "msmseg/ops.hpp"

#include <algorithm>
#include <cmath>

namespace msmseg {
namespace ops {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* what) {
    if (!a.value().same_shape(b.value()))
        throw ShapeError(std::string(what) + ": " + Tensor::shape_str(a.shape()) + " vs " +
                         Tensor::shape_str(b.shape()));
}

void require_ndim(const Var& x, int nd, const char* what) {
    if (x.value().ndim() != nd)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(nd) +
                         "-d tensor, got " + Tensor::shape_str(x.shape()));
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    const double* pb = b.value().data();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] += pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accum_grad(n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    const double* pb = b.value().data();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    const double* pb = b.value().data();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

Var div(const Var& a, const Var& b) {
    require_same_shape(a, b, "div");
    Tensor out = a.value();
    const double* pb = b.value().data();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] /= pb[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i)
                g[i] -= n.grad[i] * av[i] / (bv[i] * bv[i]);
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= c;
    return make_op(std::move(out), {a}, [c](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
    });
}

Var add_const(const Var& a, double c) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] += c;
    return make_op(std::move(out), {a},
                   [](Node& n) { n.parents[0]->accum_grad(n.grad); });
}

Var silu(const Var& x) {
    Tensor out = x.value();
    for (std::int64_t i = 0; i < out.size(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-out[i]));
        out[i] = out[i] * s;
    }
    return make_op(std::move(out), {x}, [](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-xv[i]));
            g[i] += n.grad[i] * s * (1.0 + xv[i] * (1.0 - s));
        }
    });
}

Var sigmoid(const Var& x) {
    Tensor out = x.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Tensor saved = out;
    return make_op(std::move(out), {x}, [saved](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i)
            g[i] += n.grad[i] * saved[i] * (1.0 - saved[i]);
    });
}

Var logv(const Var& x) {
    Tensor out = x.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
    return make_op(std::move(out), {x}, [](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / xv[i];
    });
}

Var clamp(const Var& x, double lo, double hi) {
    Tensor out = x.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
    return make_op(std::move(out), {x}, [lo, hi](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i)
            if (xv[i] >= lo && xv[i] <= hi) g[i] += n.grad[i];
    });
}

Var add_broadcast_channel(const Var& x, const Var& b) {
    require_ndim(x, 3, "add_broadcast_channel");
    if (b.value().ndim() != 3 || b.shape()[0] != 1 || b.shape()[1] != x.shape()[1] ||
        b.shape()[2] != x.shape()[2])
        throw ShapeError("add_broadcast_channel: bias must be [1,h,w] matching x");
    const int C = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
    Tensor out = x.value();
    const double* pb = b.value().data();
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < hw; ++i) out[static_cast<std::int64_t>(c) * hw + i] += pb[i];
    return make_op(std::move(out), {x, b}, [C, hw](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < hw; ++i) g[i] += n.grad[static_cast<std::int64_t>(c) * hw + i];
        }
    });
}

Var mul_broadcast_channel(const Var& x, const Var& w) {
    require_ndim(x, 3, "mul_broadcast_channel");
    if (w.value().ndim() != 3 || w.shape()[0] != 1 || w.shape()[1] != x.shape()[1] ||
        w.shape()[2] != x.shape()[2])
        throw ShapeError("mul_broadcast_channel: weight must be [1,h,w] matching x");
    const int C = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
    Tensor out = x.value();
    const double* pw = w.value().data();
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < hw; ++i) out[static_cast<std::int64_t>(c) * hw + i] *= pw[i];
    return make_op(std::move(out), {x, w}, [C, hw](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& wv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_ref();
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < hw; ++i) {
                    std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                    g[k] += n.grad[k] * wv[i];
                }
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < hw; ++i) {
                    std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                    g[i] += n.grad[k] * xv[k];
                }
        }
    });
}

Var scale_by_scalar(const Var& x, const Var& s) {
    if (s.value().size() != 1) throw ShapeError("scale_by_scalar: scale must be a scalar");
    const double sv = s.value()[0];
    Tensor out = x.value();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= sv;
    return make_op(std::move(out), {x, s}, [sv](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_ref();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * sv;
        }
        if (n.parents[1]->requires_grad) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < xv.size(); ++i) acc += n.grad[i] * xv[i];
            n.parents[1]->grad_ref()[0] += acc;
        }
    });
}

Var slice_channels(const Var& x, int c0, int c1) {
    require_ndim(x, 3, "slice_channels");
    const int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (c0 < 0 || c1 > C || c0 >= c1) throw ShapeError("slice_channels: bad channel range");
    const int hw = h * w;
    Tensor out({c1 - c0, h, w});
    std::copy(x.value().data() + static_cast<std::int64_t>(c0) * hw,
              x.value().data() + static_cast<std::int64_t>(c1) * hw, out.data());
    return make_op(std::move(out), {x}, [c0, hw](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        double* dst = g.data() + static_cast<std::int64_t>(c0) * hw;
        for (std::int64_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
    });
}

Var concat_chw(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_chw: empty input list");
    const int h = xs[0].shape()[1], w = xs[0].shape()[2];
    int C = 0;
    for (const Var& v : xs) {
        require_ndim(v, 3, "concat_chw");
        if (v.shape()[1] != h || v.shape()[2] != w)
            throw ShapeError("concat_chw: spatial dims differ");
        C += v.shape()[0];
    }
    Tensor out({C, h, w});
    std::int64_t off = 0;
    for (const Var& v : xs) {
        std::copy(v.value().data(), v.value().data() + v.value().size(), out.data() + off);
        off += v.value().size();
    }
    return make_op(std::move(out), xs, [](Node& n) {
        std::int64_t off = 0;
        for (auto& p : n.parents) {
            std::int64_t sz = p->value.size();
            if (p->requires_grad) {
                Tensor& g = p->grad_ref();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += n.grad[off + i];
            }
            off += sz;
        }
    });
}

Var matmul(const Var& a, const Var& b) {
    require_ndim(a, 2, "matmul");
    require_ndim(b, 2, "matmul");
    const int N = a.shape()[0], K = a.shape()[1], M = b.shape()[1];
    if (b.shape()[0] != K) throw ShapeError("matmul: inner dims differ");
    Tensor out({N, M});
    const double* pa = a.value().data();
    const double* pb = b.value().data();
    double* po = out.data();
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k) {
            const double av = pa[static_cast<std::int64_t>(i) * K + k];
            const double* brow = pb + static_cast<std::int64_t>(k) * M;
            double* orow = po + static_cast<std::int64_t>(i) * M;
            for (int j = 0; j < M; ++j) orow[j] += av * brow[j];
        }
    return make_op(std::move(out), {a, b}, [N, K, M](Node& n) {
        const double* pa = n.parents[0]->value.data();
        const double* pb = n.parents[1]->value.data();
        const double* g = n.grad.data();
        if (n.parents[0]->requires_grad) {
            double* ga = n.parents[0]->grad_ref().data();
            // ga = g * b^T
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) {
                    const double gv = g[static_cast<std::int64_t>(i) * M + j];
                    const double* brow = pb;  // b[k][j] walk over k
                    for (int k = 0; k < K; ++k)
                        ga[static_cast<std::int64_t>(i) * K + k] +=
                            gv * brow[static_cast<std::int64_t>(k) * M + j];
                }
        }
        if (n.parents[1]->requires_grad) {
            double* gb = n.parents[1]->grad_ref().data();
            // gb = a^T * g
            for (int i = 0; i < N; ++i)
                for (int k = 0; k < K; ++k) {
                    const double av = pa[static_cast<std::int64_t>(i) * K + k];
                    const double* grow = g + static_cast<std::int64_t>(i) * M;
                    double* brow = gb + static_cast<std::int64_t>(k) * M;
                    for (int j = 0; j < M; ++j) brow[j] += av * grow[j];
                }
        }
    });
}

Var add_bias_rows(const Var& x, const Var& b) {
    require_ndim(x, 2, "add_bias_rows");
    const int N = x.shape()[0], M = x.shape()[1];
    if (b.value().size() != M) throw ShapeError("add_bias_rows: bias length != columns");
    Tensor out = x.value();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) out.at(i, j) += b.value()[j];
    return make_op(std::move(out), {x, b}, [N, M](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < M; ++j) g[j] += n.grad.at(i, j);
        }
    });
}

Var transpose2(const Var& a) {
    require_ndim(a, 2, "transpose2");
    const int N = a.shape()[0], M = a.shape()[1];
    Tensor out({M, N});
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) out.at(j, i) = a.value().at(i, j);
    return make_op(std::move(out), {a}, [N, M](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) g.at(i, j) += n.grad.at(j, i);
    });
}

Var slice_cols(const Var& a, int c0, int c1) {
    require_ndim(a, 2, "slice_cols");
    const int N = a.shape()[0], M = a.shape()[1];
    if (c0 < 0 || c1 > M || c0 >= c1) throw ShapeError("slice_cols: bad column range");
    Tensor out({N, c1 - c0});
    for (int i = 0; i < N; ++i)
        for (int j = c0; j < c1; ++j) out.at(i, j - c0) = a.value().at(i, j);
    return make_op(std::move(out), {a}, [N, c0, c1](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int i = 0; i < N; ++i)
            for (int j = c0; j < c1; ++j) g.at(i, j) += n.grad.at(i, j - c0);
    });
}

Var slice_rows(const Var& a, int r0, int r1) {
    require_ndim(a, 2, "slice_rows");
    const int N = a.shape()[0], M = a.shape()[1];
    if (r0 < 0 || r1 > N || r0 >= r1) throw ShapeError("slice_rows: bad row range");
    Tensor out({r1 - r0, M});
    std::copy(a.value().data() + static_cast<std::int64_t>(r0) * M,
              a.value().data() + static_cast<std::int64_t>(r1) * M, out.data());
    return make_op(std::move(out), {a}, [r0, M](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        double* dst = g.data() + static_cast<std::int64_t>(r0) * M;
        for (std::int64_t i = 0; i < n.grad.size(); ++i) dst[i] += n.grad[i];
    });
}

Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_cols: empty input list");
    const int N = xs[0].shape()[0];
    int M = 0;
    for (const Var& v : xs) {
        require_ndim(v, 2, "concat_cols");
        if (v.shape()[0] != N) throw ShapeError("concat_cols: row counts differ");
        M += v.shape()[1];
    }
    Tensor out({N, M});
    int off = 0;
    for (const Var& v : xs) {
        const int m = v.shape()[1];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < m; ++j) out.at(i, off + j) = v.value().at(i, j);
        off += m;
    }
    return make_op(std::move(out), xs, [N](Node& n) {
        int off = 0;
        for (auto& p : n.parents) {
            const int m = p->value.shape()[1];
            if (p->requires_grad) {
                Tensor& g = p->grad_ref();
                for (int i = 0; i < N; ++i)
                    for (int j = 0; j < m; ++j) g.at(i, j) += n.grad.at(i, off + j);
            }
            off += m;
        }
    });
}

Var concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_rows: empty input list");
    const int M = xs[0].shape()[1];
    int N = 0;
    for (const Var& v : xs) {
        require_ndim(v, 2, "concat_rows");
        if (v.shape()[1] != M) throw ShapeError("concat_rows: column counts differ");
        N += v.shape()[0];
    }
    Tensor out({N, M});
    std::int64_t off = 0;
    for (const Var& v : xs) {
        std::copy(v.value().data(), v.value().data() + v.value().size(), out.data() + off);
        off += v.value().size();
    }
    return make_op(std::move(out), xs, [](Node& n) {
        std::int64_t off = 0;
        for (auto& p : n.parents) {
            std::int64_t sz = p->value.size();
            if (p->requires_grad) {
                Tensor& g = p->grad_ref();
                for (std::int64_t i = 0; i < sz; ++i) g[i] += n.grad[off + i];
            }
            off += sz;
        }
    });
}

Var softmax_rows(const Var& x) {
    require_ndim(x, 2, "softmax_rows");
    const int N = x.shape()[0], M = x.shape()[1];
    Tensor out = x.value();
    for (int i = 0; i < N; ++i) {
        double mx = out.at(i, 0);
        for (int j = 1; j < M; ++j) mx = std::max(mx, out.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < M; ++j) {
            double e = std::exp(out.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < M; ++j) out.at(i, j) /= sum;
    }
    Tensor probs = out;
    return make_op(std::move(out), {x}, [N, M, probs](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int i = 0; i < N; ++i) {
            double dot = 0.0;
            for (int j = 0; j < M; ++j) dot += n.grad.at(i, j) * probs.at(i, j);
            for (int j = 0; j < M; ++j)
                g.at(i, j) += probs.at(i, j) * (n.grad.at(i, j) - dot);
        }
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
    require_ndim(x, 2, "layer_norm_rows");
    const int N = x.shape()[0], D = x.shape()[1];
    if (gamma.value().size() != D || beta.value().size() != D)
        throw ShapeError("layer_norm_rows: gamma/beta must have length D");
    Tensor out({N, D});
    Tensor xhat({N, D});
    std::vector<double> inv_sigma(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        double mu = 0.0;
        for (int j = 0; j < D; ++j) mu += x.value().at(i, j);
        mu /= D;
        double var = 0.0;
        for (int j = 0; j < D; ++j) {
            double d = x.value().at(i, j) - mu;
            var += d * d;
        }
        var /= D;
        double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[static_cast<std::size_t>(i)] = is;
        for (int j = 0; j < D; ++j) {
            double xh = (x.value().at(i, j) - mu) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = gamma.value()[j] * xh + beta.value()[j];
        }
    }
    return make_op(std::move(out), {x, gamma, beta}, [N, D, xhat, inv_sigma](Node& n) {
        const Tensor& gm = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& gx = n.parents[0]->grad_ref();
            for (int i = 0; i < N; ++i) {
                double mean_g = 0.0, mean_gx = 0.0;
                for (int j = 0; j < D; ++j) {
                    double gg = n.grad.at(i, j) * gm[j];
                    mean_g += gg;
                    mean_gx += gg * xhat.at(i, j);
                }
                mean_g /= D;
                mean_gx /= D;
                for (int j = 0; j < D; ++j) {
                    double gg = n.grad.at(i, j) * gm[j];
                    gx.at(i, j) += inv_sigma[static_cast<std::size_t>(i)] *
                                   (gg - mean_g - xhat.at(i, j) * mean_gx);
                }
            }
        }
        if (n.parents[1]->requires_grad) {
            Tensor& gg = n.parents[1]->grad_ref();
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < D; ++j) gg[j] += n.grad.at(i, j) * xhat.at(i, j);
        }
        if (n.parents[2]->requires_grad) {
            Tensor& gb = n.parents[2]->grad_ref();
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < D; ++j) gb[j] += n.grad.at(i, j);
        }
    });
}

Var chw_to_tokens(const Var& x) {
    require_ndim(x, 3, "chw_to_tokens");
    const int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const int N = h * w;
    Tensor out({N, C});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < N; ++i) out.at(i, c) = x.value()[static_cast<std::int64_t>(c) * N + i];
    return make_op(std::move(out), {x}, [C, N](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < N; ++i) g[static_cast<std::int64_t>(c) * N + i] += n.grad.at(i, c);
    });
}

Var tokens_to_chw(const Var& x, int h, int w) {
    require_ndim(x, 2, "tokens_to_chw");
    const int N = x.shape()[0], C = x.shape()[1];
    if (N != h * w) throw ShapeError("tokens_to_chw: token count != h*w");
    Tensor out({C, h, w});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < N; ++i) out[static_cast<std::int64_t>(c) * N + i] = x.value().at(i, c);
    return make_op(std::move(out), {x}, [C, N](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < N; ++i) g.at(i, c) += n.grad[static_cast<std::int64_t>(c) * N + i];
    });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    require_ndim(x, 3, "conv2d input");
    if (w.value().ndim() != 4) throw ShapeError("conv2d: weight must be [Co,Ci,kh,kw]");
    const int Ci = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    const int Co = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
    if (w.shape()[1] != Ci) throw ShapeError("conv2d: weight Ci mismatch");
    if (b.value().size() != Co) throw ShapeError("conv2d: bias size mismatch");
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw ShapeError("conv2d: output would be empty");
    Tensor out({Co, Ho, Wo});
    const double* px = x.value().data();
    const double* pw = w.value().data();
    const double* pbias = b.value().data();
    double* po = out.data();
    for (int co = 0; co < Co; ++co) {
        for (int oy = 0; oy < Ho; ++oy) {
            for (int ox = 0; ox < Wo; ++ox) {
                double acc = pbias[co];
                const int iy0 = oy * stride - pad;
                const int ix0 = ox * stride - pad;
                for (int ci = 0; ci < Ci; ++ci) {
                    const double* xc = px + (static_cast<std::int64_t>(ci) * H) * W;
                    const double* wc =
                        pw + ((static_cast<std::int64_t>(co) * Ci + ci) * kh) * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= H) continue;
                        const double* xrow = xc + static_cast<std::int64_t>(iy) * W;
                        const double* wrow = wc + static_cast<std::int64_t>(ky) * kw;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ix0 + kx;
                            if (ix < 0 || ix >= W) continue;
                            acc += wrow[kx] * xrow[ix];
                        }
                    }
                }
                po[(static_cast<std::int64_t>(co) * Ho + oy) * Wo + ox] = acc;
            }
        }
    }
    return make_op(std::move(out), {x, w, b},
                   [Ci, H, W, Co, kh, kw, Ho, Wo, stride, pad](Node& n) {
        const double* px = n.parents[0]->value.data();
        const double* pw = n.parents[1]->value.data();
        const double* g = n.grad.data();
        const bool need_x = n.parents[0]->requires_grad;
        const bool need_w = n.parents[1]->requires_grad;
        const bool need_b = n.parents[2]->requires_grad;
        double* gx = need_x ? n.parents[0]->grad_ref().data() : nullptr;
        double* gw = need_w ? n.parents[1]->grad_ref().data() : nullptr;
        double* gb = need_b ? n.parents[2]->grad_ref().data() : nullptr;
        for (int co = 0; co < Co; ++co) {
            for (int oy = 0; oy < Ho; ++oy) {
                for (int ox = 0; ox < Wo; ++ox) {
                    const double gv = g[(static_cast<std::int64_t>(co) * Ho + oy) * Wo + ox];
                    if (gv == 0.0) continue;
                    if (need_b) gb[co] += gv;
                    const int iy0 = oy * stride - pad;
                    const int ix0 = ox * stride - pad;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const std::int64_t xoff = (static_cast<std::int64_t>(ci) * H) * W;
                        const std::int64_t woff =
                            ((static_cast<std::int64_t>(co) * Ci + ci) * kh) * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= H) continue;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= W) continue;
                                const std::int64_t xi = xoff + static_cast<std::int64_t>(iy) * W + ix;
                                const std::int64_t wi = woff + static_cast<std::int64_t>(ky) * kw + kx;
                                if (need_x) gx[xi] += gv * pw[wi];
                                if (need_w) gw[wi] += gv * px[xi];
                            }
                        }
                    }
                }
            }
        }
    });
}

namespace {

struct BilinearTap {
    int i0, i1;
    double w1;  // weight of i1; i0 gets 1-w1
};

BilinearTap bilinear_tap(int o, int in_dim, double scale) {
    // Half-pixel-center convention (align_corners = false).
    double src = (o + 0.5) * scale - 0.5;
    BilinearTap t{};
    if (src <= 0.0) {
        t.i0 = t.i1 = 0;
        t.w1 = 0.0;
    } else if (src >= in_dim - 1) {
        t.i0 = t.i1 = in_dim - 1;
        t.w1 = 0.0;
    } else {
        t.i0 = static_cast<int>(std::floor(src));
        t.i1 = t.i0 + 1;
        t.w1 = src - t.i0;
    }
    return t;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    if (x.ndim() != 3) throw ShapeError("bilinear_resize: expected [C,h,w]");
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const double sy = static_cast<double>(H) / out_h;
    const double sx = static_cast<double>(W) / out_w;
    Tensor out({C, out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        BilinearTap ty = bilinear_tap(oy, H, sy);
        for (int ox = 0; ox < out_w; ++ox) {
            BilinearTap tx = bilinear_tap(ox, W, sx);
            for (int c = 0; c < C; ++c) {
                double v00 = x.at(c, ty.i0, tx.i0);
                double v01 = x.at(c, ty.i0, tx.i1);
                double v10 = x.at(c, ty.i1, tx.i0);
                double v11 = x.at(c, ty.i1, tx.i1);
                out.at(c, oy, ox) = (1 - ty.w1) * ((1 - tx.w1) * v00 + tx.w1 * v01) +
                                    ty.w1 * ((1 - tx.w1) * v10 + tx.w1 * v11);
            }
        }
    }
    return out;
}

Var upsample_bilinear(const Var& x, int out_h, int out_w) {
    require_ndim(x, 3, "upsample_bilinear");
    const int C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    Tensor out = bilinear_resize(x.value(), out_h, out_w);
    return make_op(std::move(out), {x}, [C, H, W, out_h, out_w](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        const double sy = static_cast<double>(H) / out_h;
        const double sx = static_cast<double>(W) / out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            BilinearTap ty = bilinear_tap(oy, H, sy);
            for (int ox = 0; ox < out_w; ++ox) {
                BilinearTap tx = bilinear_tap(ox, W, sx);
                for (int c = 0; c < C; ++c) {
                    const double gv = n.grad.at(c, oy, ox);
                    g.at(c, ty.i0, tx.i0) += gv * (1 - ty.w1) * (1 - tx.w1);
                    g.at(c, ty.i0, tx.i1) += gv * (1 - ty.w1) * tx.w1;
                    g.at(c, ty.i1, tx.i0) += gv * ty.w1 * (1 - tx.w1);
                    g.at(c, ty.i1, tx.i1) += gv * ty.w1 * tx.w1;
                }
            }
        }
    });
}

Var channel_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    require_ndim(x, 3, "channel_norm");
    const int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (gamma.value().size() != C || beta.value().size() != C)
        throw ShapeError("channel_norm: gamma/beta must have length C");
    const int hw = h * w;
    Tensor out({C, h, w});
    Tensor xhat({C, h, w});
    std::vector<double> inv_sigma(static_cast<std::size_t>(hw));
    for (int i = 0; i < hw; ++i) {
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += x.value()[static_cast<std::int64_t>(c) * hw + i];
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
            double d = x.value()[static_cast<std::int64_t>(c) * hw + i] - mu;
            var += d * d;
        }
        var /= C;
        double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[static_cast<std::size_t>(i)] = is;
        for (int c = 0; c < C; ++c) {
            std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
            double xh = (x.value()[k] - mu) * is;
            xhat[k] = xh;
            out[k] = gamma.value()[c] * xh + beta.value()[c];
        }
    }
    return make_op(std::move(out), {x, gamma, beta}, [C, hw, xhat, inv_sigma](Node& n) {
        const Tensor& gm = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& gx = n.parents[0]->grad_ref();
            for (int i = 0; i < hw; ++i) {
                double mean_g = 0.0, mean_gx = 0.0;
                for (int c = 0; c < C; ++c) {
                    std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                    double gg = n.grad[k] * gm[c];
                    mean_g += gg;
                    mean_gx += gg * xhat[k];
                }
                mean_g /= C;
                mean_gx /= C;
                for (int c = 0; c < C; ++c) {
                    std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                    double gg = n.grad[k] * gm[c];
                    gx[k] += inv_sigma[static_cast<std::size_t>(i)] *
                             (gg - mean_g - xhat[k] * mean_gx);
                }
            }
        }
        if (n.parents[1]->requires_grad) {
            Tensor& gg = n.parents[1]->grad_ref();
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = 0; i < hw; ++i) {
                    std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                    acc += n.grad[k] * xhat[k];
                }
                gg[c] += acc;
            }
        }
        if (n.parents[2]->requires_grad) {
            Tensor& gb = n.parents[2]->grad_ref();
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = 0; i < hw; ++i) acc += n.grad[static_cast<std::int64_t>(c) * hw + i];
                gb[c] += acc;
            }
        }
    });
}

Var softmax_channel(const Var& x) {
    require_ndim(x, 3, "softmax_channel");
    const int C = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
    Tensor out = x.value();
    for (int i = 0; i < hw; ++i) {
        double mx = out[i];
        for (int c = 1; c < C; ++c)
            mx = std::max(mx, out[static_cast<std::int64_t>(c) * hw + i]);
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
            double e = std::exp(out[k] - mx);
            out[k] = e;
            sum += e;
        }
        for (int c = 0; c < C; ++c) out[static_cast<std::int64_t>(c) * hw + i] /= sum;
    }
    Tensor probs = out;
    return make_op(std::move(out), {x}, [C, hw, probs](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int i = 0; i < hw; ++i) {
            double dot = 0.0;
            for (int c = 0; c < C; ++c) {
                std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                dot += n.grad[k] * probs[k];
            }
            for (int c = 0; c < C; ++c) {
                std::int64_t k = static_cast<std::int64_t>(c) * hw + i;
                g[k] += probs[k] * (n.grad[k] - dot);
            }
        }
    });
}

Var mask_logits(const Var& pix, const Var& emb) {
    require_ndim(pix, 3, "mask_logits pix");
    require_ndim(emb, 2, "mask_logits emb");
    const int D = pix.shape()[0], hw = pix.shape()[1] * pix.shape()[2];
    const int K = emb.shape()[0];
    if (emb.shape()[1] != D) throw ShapeError("mask_logits: emb dim != pix channels");
    Tensor out({K, pix.shape()[1], pix.shape()[2]});
    for (int k = 0; k < K; ++k)
        for (int d = 0; d < D; ++d) {
            const double e = emb.value().at(k, d);
            const double* prow = pix.value().data() + static_cast<std::int64_t>(d) * hw;
            double* orow = out.data() + static_cast<std::int64_t>(k) * hw;
            for (int i = 0; i < hw; ++i) orow[i] += e * prow[i];
        }
    return make_op(std::move(out), {pix, emb}, [D, hw, K](Node& n) {
        const Tensor& pv = n.parents[0]->value;
        const Tensor& ev = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& g = n.parents[0]->grad_ref();
            for (int k = 0; k < K; ++k)
                for (int d = 0; d < D; ++d) {
                    const double e = ev.at(k, d);
                    const double* grow = n.grad.data() + static_cast<std::int64_t>(k) * hw;
                    double* gp = g.data() + static_cast<std::int64_t>(d) * hw;
                    for (int i = 0; i < hw; ++i) gp[i] += e * grow[i];
                }
        }
        if (n.parents[1]->requires_grad) {
            Tensor& g = n.parents[1]->grad_ref();
            for (int k = 0; k < K; ++k)
                for (int d = 0; d < D; ++d) {
                    const double* grow = n.grad.data() + static_cast<std::int64_t>(k) * hw;
                    const double* prow = pv.data() + static_cast<std::int64_t>(d) * hw;
                    double acc = 0.0;
                    for (int i = 0; i < hw; ++i) acc += grow[i] * prow[i];
                    g.at(k, d) += acc;
                }
        }
    });
}

Var select_channel_by_label(const Var& probs, const Tensor& labels) {
    require_ndim(probs, 3, "select_channel_by_label");
    const int C = probs.shape()[0], h = probs.shape()[1], w = probs.shape()[2];
    if (labels.ndim() != 2 || labels.dim(0) != h || labels.dim(1) != w)
        throw ShapeError("select_channel_by_label: labels must be [H,W] matching probs");
    const int hw = h * w;
    Tensor out({1, h, w});
    std::vector<int> idx(static_cast<std::size_t>(hw));
    for (int i = 0; i < hw; ++i) {
        int c = static_cast<int>(labels[i]);
        if (c < 0 || c >= C) throw UnknownLabelError("label " + std::to_string(c) + " out of range");
        idx[static_cast<std::size_t>(i)] = c;
        out[i] = probs.value()[static_cast<std::int64_t>(c) * hw + i];
    }
    return make_op(std::move(out), {probs}, [hw, idx](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (int i = 0; i < hw; ++i)
            g[static_cast<std::int64_t>(idx[static_cast<std::size_t>(i)]) * hw + i] += n.grad[i];
    });
}

Var sum(const Var& x) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.value().size(); ++i) acc += x.value()[i];
    return make_op(Tensor::scalar(acc), {x}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        const double gv = n.grad[0];
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

Var mean(const Var& x) {
    const double inv = 1.0 / static_cast<double>(x.value().size());
    double acc = 0.0;
    for (std::int64_t i = 0; i < x.value().size(); ++i) acc += x.value()[i];
    return make_op(Tensor::scalar(acc * inv), {x}, [inv](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        const double gv = n.grad[0] * inv;
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

Var reshape(const Var& x, std::vector<int> shape) {
    if (Tensor::count(shape) != x.value().size()) throw ShapeError("reshape: element count differs");
    Tensor out = Tensor::from(std::move(shape), x.value().vec());
    return make_op(std::move(out), {x}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_ref();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

void check_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) throw NonFiniteError(std::string(what) + " contains NaN/Inf");
}

}  // namespace ops
}  // namespace msmseg
