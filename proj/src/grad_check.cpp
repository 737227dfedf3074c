#include "msmseg/grad_check.hpp"

#include <cmath>

namespace msmseg {

double grad_check(const std::function<Var(const std::vector<Var>&)>& f,
                  const std::vector<Tensor>& inputs, double eps) {
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(Var::leaf(t, true));
    Var y = f(leaves);
    if (y.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
    y.backward();

    auto eval = [&](const std::vector<Tensor>& xs) {
        std::vector<Var> consts;
        consts.reserve(xs.size());
        for (const Tensor& t : xs) consts.push_back(Var::constant(t));
        return f(consts).value()[0];
    };

    double worst = 0.0;
    std::vector<Tensor> probe = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& analytic = leaves[i].grad();
        for (std::int64_t j = 0; j < inputs[i].size(); ++j) {
            const double orig = probe[i][j];
            probe[i][j] = orig + eps;
            const double fp = eval(probe);
            probe[i][j] = orig - eps;
            const double fm = eval(probe);
            probe[i][j] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = analytic.empty() ? 0.0 : analytic[j];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace msmseg
