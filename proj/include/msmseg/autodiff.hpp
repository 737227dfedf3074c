#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "msmseg/tensor.hpp"

namespace msmseg {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex in the dynamic reverse-mode tape.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily by accum_grad
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    // Reads this->grad and accumulates into parents' grads. Only set when
    // requires_grad is true.
    std::function<void(Node&)> backward;

    void accum_grad(const Tensor& g) {
        if (grad.empty()) grad = Tensor::zeros(value.shape());
        const double* src = g.data();
        double* dst = grad.data();
        const std::int64_t n = grad.size();
        for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
    }

    Tensor& grad_ref() {
        if (grad.empty()) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

/// Value-semantics handle to a tape node.
class Var {
public:
    Var() = default;

    static Var leaf(Tensor value, bool requires_grad = true) {
        Var v;
        v.node_ = std::make_shared<Node>();
        v.node_->value = std::move(value);
        v.node_->requires_grad = requires_grad;
        return v;
    }

    static Var constant(Tensor value) { return leaf(std::move(value), false); }

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& value_mut() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& grad_ref() { return node_->grad_ref(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const std::vector<int>& shape() const { return node_->value.shape(); }

    void zero_grad() { node_->grad = Tensor(); }

    NodePtr node() const { return node_; }

    /// Backpropagate from this node. The value must be a single scalar; it is
    /// seeded with gradient 1.
    void backward() const;

    /// Backpropagate with an explicit seed gradient (same shape as value).
    void backward(const Tensor& seed) const;

private:
    explicit Var(NodePtr n) : node_(std::move(n)) {}
    friend Var make_op(Tensor, std::vector<Var>, std::function<void(Node&)>);
    NodePtr node_;
};

/// Builds an op node: value already computed, parents listed, backward closure
/// attached only when some parent wants gradients.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

}  // namespace msmseg
