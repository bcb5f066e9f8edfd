#pragma once

#include <unordered_map>
#include <vector>

#include "rfad/nn/graph.hpp"

namespace rfad::nn {

struct SgdConfig {
    double lr = 1e-2;
    double momentum = 0.9;
    int64_t total_steps = 0;  // >0 enables cosine decay to 0 over this many steps
};

// SGD with classical momentum: v <- m*v + g; p <- p - lr_t*v.
// Parameters whose gradient was never produced in the current step are
// skipped entirely (no velocity decay, no update) — this is what makes
// modality-routed training leave untouched partitions bitwise identical.
class SgdOptimizer {
public:
    explicit SgdOptimizer(SgdConfig cfg) : cfg_(cfg) {}

    double lr_at(int64_t step) const;
    void apply(const std::vector<Var>& params, int64_t step);

    const SgdConfig& config() const { return cfg_; }

private:
    SgdConfig cfg_;
    std::unordered_map<Node*, Tensor> vel_;
};

}  // namespace rfad::nn
