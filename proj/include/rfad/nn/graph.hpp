#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rfad/nn/tensor.hpp"

namespace rfad::nn {

// Reverse-mode autodiff over Tensor values. Each op allocates a Node that
// holds its forward value, the input handles, and a closure that pushes the
// node's gradient into the inputs' gradients. backward() runs the closures
// in reverse topological order. Graphs are rebuilt per forward pass; leaves
// (parameters) persist and accumulate gradients until the optimizer clears
// them.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::string name;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backprop;

    Tensor& ensure_grad() {
        if (grad.empty() && value.size() > 0) grad = Tensor(value.shape());
        return grad;
    }
    void zero_grad() {
        if (!grad.empty()) grad.fill(0.0);
    }
};

using Var = std::shared_ptr<Node>;

Var leaf(Tensor v, bool requires_grad = false, std::string name = {});
inline Var constant(Tensor v) { return leaf(std::move(v), false); }
Var constant_scalar(double v);

// Stops gradient flow: copies the value into a fresh non-grad leaf.
Var detach(const Var& x);

// Accumulates d(root)/d(leaf) into .grad of every reachable node that
// requires a gradient. root must be scalar (size 1).
void backward(const Var& root);

}  // namespace rfad::nn
