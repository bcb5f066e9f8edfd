#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace rfad::nn {

// Dense row-major tensor of doubles. Shapes are small (rank <= 4 in
// practice); all indexing helpers are bounds-unchecked except at().
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // Checked multi-index access; test and setup code only.
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;

    void fill(double v);
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static int64_t numel(const std::vector<int>& shape);
    static std::string shape_str(const std::vector<int>& shape);

private:
    int64_t checked_offset(std::initializer_list<int> idx) const;

    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace rfad::nn
