#include "msmseg/optimizer.hpp"

#include <cmath>

namespace msmseg {

AdamW::AdamW(std::vector<std::pair<std::string, Var>> params, Options opt) : opt_(opt) {
    slots_.reserve(params.size());
    for (auto& [name, var] : params) {
        Slot s;
        s.param = var;
        s.m = Tensor::zeros(var.value().shape());
        s.v = Tensor::zeros(var.value().shape());
        slots_.push_back(std::move(s));
    }
}

void AdamW::step(double lr_override) {
    const double lr = lr_override >= 0.0 ? lr_override : opt_.lr;
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, t_);
    const double bc2 = 1.0 - std::pow(opt_.beta2, t_);
    for (Slot& s : slots_) {
        Tensor& w = s.param.value_mut();
        const Tensor& g = s.param.grad();
        const bool has_grad = !g.empty();
        for (std::int64_t i = 0; i < w.size(); ++i) {
            const double gi = has_grad ? g[i] : 0.0;
            s.m[i] = opt_.beta1 * s.m[i] + (1.0 - opt_.beta1) * gi;
            s.v[i] = opt_.beta2 * s.v[i] + (1.0 - opt_.beta2) * gi * gi;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            w[i] -= lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * w[i]);
        }
    }
}

}  // namespace msmseg
