#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "rfad/nn/graph.hpp"

namespace rfad::nn {

// Named learnable parameters. Registration order is stable and defines the
// checkpoint block order. Names are dotted paths whose leading component
// selects the training partition (e.g. "skelgen.features.b0.w").
class ParamStore {
public:
    Var add(const std::string& name, Tensor init);  // duplicate name -> error
    Var get(const std::string& name) const;         // missing name -> error
    bool has(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }
    std::vector<Var> all() const;
    std::vector<Var> with_prefix(const std::string& prefix) const;

    void zero_grads();
    int64_t scalar_count() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Var> by_name_;
};

// Seeded initializers (all draws consumed in deterministic order).
Tensor he_normal(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng);
Tensor normal_init(const std::vector<int>& shape, double stddev, std::mt19937_64& rng);

}  // namespace rfad::nn
