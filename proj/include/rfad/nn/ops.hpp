#pragma once

#include <array>
#include <vector>

#include "rfad/nn/graph.hpp"

namespace rfad::nn {

// Elementwise / scalar
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var emax(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var pow_scalar(const Var& x, double e);  // requires x >= 0 when e is fractional

// Shape
Var reshape(const Var& x, std::vector<int> shape);
Var permute(const Var& x, std::vector<int> perm);
Var concat0(const std::vector<Var>& xs);
Var slice0(const Var& x, int start, int len);
Var slice_cols(const Var& x, int start, int len);        // x (m,n)
Var concat_cols(const std::vector<Var>& xs);             // all (m,n_i)

// Broadcast
Var mul_bcast0(const Var& x, const Var& m);              // x (C,rest), m (1,rest)
Var add_bias_ch(const Var& x, const Var& b);             // x (C,rest), b (C)
Var add_bias_row(const Var& x, const Var& b);            // x (m,n), b (n)
Var add_const(const Var& x, const Tensor& c);            // same shape constant
Var affine_cols(const Var& x, const Tensor& s, const Tensor& o);  // x (m,n): x*s+o per column

// Linear algebra
Var matmul(const Var& a, const Var& b);                  // (m,k)x(k,n)

// Convolution. x layout (C_in, spatial...), w (C_out, C_in, kernel...),
// b (C_out) or null for no bias. Zero padding.
Var conv2d(const Var& x, const Var& w, const Var& b,
           std::array<int, 2> stride, std::array<int, 2> pad);
Var conv3d(const Var& x, const Var& w, const Var& b,
           std::array<int, 3> stride, std::array<int, 3> pad);

// Row-block ops: the trailing row_len entries form one row; the tensor is
// treated as (size/row_len) rows.
Var softmax_rows(const Var& x, int row_len);
Var normalize_rows(const Var& x, int row_len);           // rows must sum > 0
Var reduce_max_rows(const Var& x, int row_len);
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var dot_const(const Var& x, const Tensor& w);            // scalar probe

// Resampling (sampling positions are constants; gradients flow through
// sample values only)
Var roi_bilinear(const Var& x, double cx, double cy, double w, double h,
                 int oh, int ow);                        // x (C,H,W) -> (C,oh,ow)
Var crop_resize_cols(const Var& x, double t0, double t1, int out_len);  // x (C,T) -> (C,out_len)
Var resample_rows(const Var& x, const std::vector<double>& src_t,
                  const std::vector<double>& dst_t);     // x (K,D) -> (|dst|,D), linear in t

// Losses (targets and weights are constants; each returns a scalar equal to
// the weighted sum over elements)
Var bce_logits(const Var& logits, const Tensor& targets, const Tensor& weights);
Var ce_rows(const Var& logits, const std::vector<int>& target, const Tensor& weights);
Var smooth_l1(const Var& pred, const Tensor& target, double beta, const Tensor& weights);

}  // namespace rfad::nn
