#pragma once

#include <random>

#include "rfad/nn/graph.hpp"
#include "rfad/nn/ops.hpp"
#include "rfad/nn/tensor.hpp"

namespace testutil {

inline rfad::nn::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                                      double hi = 1.0) {
    rfad::nn::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

inline rfad::nn::Var random_leaf(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
    return rfad::nn::leaf(random_tensor(std::move(shape), rng, lo, hi), true);
}

// Fixed random linear probe turning a tensor output into a scalar with
// well-spread gradients.
inline rfad::nn::Var probe(const rfad::nn::Var& x, std::mt19937_64& rng) {
    return rfad::nn::dot_const(x, random_tensor(x->value.shape(), rng, -1.0, 1.0));
}

}  // namespace testutil
