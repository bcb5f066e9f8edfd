#include "rfad/nn/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace rfad::nn {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(numel(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (numel(shape_) != static_cast<int64_t>(data_.size()))
        throw std::invalid_argument("tensor: data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

int64_t Tensor::numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor: negative dimension");
        n *= d;
    }
    return n;
}

int64_t Tensor::checked_offset(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank())
        throw std::out_of_range("tensor: index rank mismatch");
    int64_t off = 0;
    int i = 0;
    for (int v : idx) {
        if (v < 0 || v >= shape_[static_cast<size_t>(i)])
            throw std::out_of_range("tensor: index out of range");
        off = off * shape_[static_cast<size_t>(i)] + v;
        ++i;
    }
    return off;
}

double& Tensor::at(std::initializer_list<int> idx) {
    return data_[static_cast<size_t>(checked_offset(idx))];
}

double Tensor::at(std::initializer_list<int> idx) const {
    return data_[static_cast<size_t>(checked_offset(idx))];
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

}  // namespace rfad::nn
