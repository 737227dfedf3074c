#include "msmseg/autodiff.hpp"

#include <unordered_set>

namespace msmseg {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool need = false;
    node->parents.reserve(parents.size());
    for (const Var& p : parents) {
        node->parents.push_back(p.node());
        need = need || p.requires_grad();
    }
    node->requires_grad = need;
    if (need) node->backward = std::move(backward);
    return Var(std::move(node));
}

namespace {

void topo_visit(const NodePtr& n, std::unordered_set<Node*>& seen, std::vector<NodePtr>& order) {
    // Iterative DFS; graphs can be a few thousand nodes deep across a slice.
    struct Frame {
        NodePtr node;
        std::size_t next_parent = 0;
    };
    std::vector<Frame> stack;
    if (seen.count(n.get())) return;
    stack.push_back({n});
    seen.insert(n.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            NodePtr p = f.node->parents[f.next_parent++];
            if (p && !seen.count(p.get()) && p->requires_grad) {
                seen.insert(p.get());
                stack.push_back({p});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
}

void run_backward(const NodePtr& root) {
    std::unordered_set<Node*> seen;
    std::vector<NodePtr> order;
    topo_visit(root, seen, order);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = **it;
        if (n.backward && !n.grad.empty()) n.backward(n);
    }
}

}  // namespace

void Var::backward() const {
    if (node_->value.size() != 1)
        throw ShapeError("backward(): root must be a scalar; got " +
                         Tensor::shape_str(node_->value.shape()));
    node_->grad_ref()[0] += 1.0;
    run_backward(node_);
}

void Var::backward(const Tensor& seed) const {
    if (!seed.same_shape(node_->value)) throw ShapeError("backward(seed): shape mismatch");
    node_->accum_grad(seed);
    run_backward(node_);
}

}  // namespace msmseg
