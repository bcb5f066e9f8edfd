#include "rfad/nn/optim.hpp"

#include <cmath>

namespace rfad::nn {

double SgdOptimizer::lr_at(int64_t step) const {
    if (cfg_.total_steps <= 0) return cfg_.lr;
    const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg_.total_steps));
    return cfg_.lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

void SgdOptimizer::apply(const std::vector<Var>& params, int64_t step) {
    const double lr = lr_at(step);
    for (const auto& p : params) {
        if (p->grad.size() == 0) continue;  // did not participate in this step
        auto [it, fresh] = vel_.try_emplace(p.get(), Tensor(p->value.shape()));
        Tensor& v = it->second;
        const int64_t n = p->value.size();
        for (int64_t i = 0; i < n; ++i) {
            v[i] = cfg_.momentum * v[i] + p->grad[i];
            p->value[i] -= lr * v[i];
        }
    }
}

}  // namespace rfad::nn
