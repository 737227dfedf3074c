#pragma once

#include <functional>

#include "msmseg/ops.hpp"

namespace msmseg {

/// Central finite-difference check of a scalar-valued function against the
/// tape's analytic gradient. Returns the max over all coordinates of
/// |a - n| / max(|a|, |n|, 1e-8). Inputs are float64 copies; the function is
/// re-evaluated twice per coordinate.
double grad_check(const std::function<Var(const std::vector<Var>&)>& f,
                  const std::vector<Tensor>& inputs, double eps = 1e-5);

/// Same check against existing leaf parameters: `forward` must rebuild the
/// graph from the current parameter values on every call (the normal module
/// forward path does). Gradients on the parameters are cleared first.
double grad_check_params(const std::function<Var()>& forward, const std::vector<Var>& params,
                         double eps = 1e-5);

}  // namespace msmseg
