#include "rfad/nn/graph.hpp"

#include <stdexcept>
#include <unordered_set>

namespace rfad::nn {

Var leaf(Tensor v, bool requires_grad, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    n->name = std::move(name);
    return n;
}

Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

Var detach(const Var& x) { return leaf(x->value, false); }

void backward(const Var& root) {
    if (!root) throw std::invalid_argument("backward: null root");
    if (root->value.size() != 1) throw std::invalid_argument("backward: root must be scalar");

    // Iterative post-order DFS; order[] ends with root.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        size_t next_input;
    };
    std::vector<Frame> stack;
    if (root->requires_grad) {
        stack.push_back({root.get(), 0});
        visited.insert(root.get());
    }
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_input < f.node->inputs.size()) {
            Node* in = f.node->inputs[f.next_input++].get();
            if (in->requires_grad && !visited.count(in)) {
                visited.insert(in);
                stack.push_back({in, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    // Only leaf grads accumulate across backward calls; interior node grads
    // are per-pass scratch and must start from zero.
    for (Node* n : order)
        if (!n->inputs.empty()) n->zero_grad();

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
}

}  // namespace rfad::nn
