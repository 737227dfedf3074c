#pragma once

#include "msmseg/autodiff.hpp"

namespace msmseg {

/// AdamW with decoupled weight decay. step() consumes the gradients currently
/// stored on the parameters and leaves them untouched (call zero_grads after).
class AdamW {
public:
    struct Options {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    };

    AdamW(std::vector<std::pair<std::string, Var>> params, Options opt);

    /// One update; `lr_override` < 0 means use the configured rate.
    void step(double lr_override = -1.0);

    int steps_taken() const { return t_; }
    const Options& options() const { return opt_; }

private:
    struct Slot {
        Var param;
        Tensor m, v;
    };
    std::vector<Slot> slots_;
    Options opt_;
    int t_ = 0;
};

}  // namespace msmseg
