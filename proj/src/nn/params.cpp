#include "rfad/nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace rfad::nn {

Var ParamStore::add(const std::string& name, Tensor init) {
    if (by_name_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    auto v = leaf(std::move(init), /*requires_grad=*/true, name);
    order_.push_back(name);
    by_name_.emplace(name, v);
    return v;
}

Var ParamStore::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second;
}

bool ParamStore::has(const std::string& name) const { return by_name_.count(name) > 0; }

std::vector<Var> ParamStore::all() const {
    std::vector<Var> out;
    out.reserve(order_.size());
    for (const auto& n : order_) out.push_back(by_name_.at(n));
    return out;
}

std::vector<Var> ParamStore::with_prefix(const std::string& prefix) const {
    std::vector<Var> out;
    for (const auto& n : order_)
        if (n.rfind(prefix, 0) == 0) out.push_back(by_name_.at(n));
    return out;
}

void ParamStore::zero_grads() {
    for (const auto& n : order_) by_name_.at(n)->zero_grad();
}

int64_t ParamStore::scalar_count() const {
    int64_t total = 0;
    for (const auto& n : order_) total += by_name_.at(n)->value.size();
    return total;
}

Tensor he_normal(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng) {
    if (fan_in <= 0) throw std::invalid_argument("he_normal: fan_in must be positive");
    return normal_init(shape, std::sqrt(2.0 / fan_in), rng);
}

Tensor normal_init(const std::vector<int>& shape, double stddev, std::mt19937_64& rng) {
    Tensor t(shape);
    std::normal_distribution<double> dist(0.0, stddev);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

}  // namespace rfad::nn
