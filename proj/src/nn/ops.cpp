#include "rfad/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfad::nn {

namespace {

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    Tensor::shape_str(a->value.shape()) + " vs " +
                                    Tensor::shape_str(b->value.shape()));
}

int64_t trailing_size(const Tensor& t, int from_axis) {
    int64_t n = 1;
    for (int i = from_axis; i < t.rank(); ++i) n *= t.dim(i);
    return n;
}

}  // namespace

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
    return make_op(std::move(out), {a, b}, [n](Node& nd) {
        for (int k = 0; k < 2; ++k) {
            Node& in = *nd.inputs[static_cast<size_t>(k)];
            if (!in.requires_grad) continue;
            Tensor& g = in.ensure_grad();
            for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] - b->value[i];
    return make_op(std::move(out), {a, b}, [n](Node& nd) {
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < n; ++i) g[i] -= nd.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
    return make_op(std::move(out), {a, b}, [n](Node& nd) {
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i] * nd.inputs[1]->value[i];
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i] * nd.inputs[0]->value[i];
        }
    });
}

Var emax(const Var& a, const Var& b) {
    check_same_shape(a, b, "emax");
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    auto pick_a = std::make_shared<std::vector<char>>(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        bool fa = a->value[i] >= b->value[i];
        (*pick_a)[static_cast<size_t>(i)] = fa;
        out[i] = fa ? a->value[i] : b->value[i];
    }
    return make_op(std::move(out), {a, b}, [n, pick_a](Node& nd) {
        for (int k = 0; k < 2; ++k) {
            Node& in = *nd.inputs[static_cast<size_t>(k)];
            if (!in.requires_grad) continue;
            Tensor& g = in.ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                if ((*pick_a)[static_cast<size_t>(i)] == (k == 0)) g[i] += nd.grad[i];
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * s;
    return make_op(std::move(out), {a}, [n, s](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i] * s;
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out(a->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + s;
    return make_op(std::move(out), {a}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
    });
}

Var relu(const Var& x) {
    Tensor out(x->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
    return make_op(std::move(out), {x}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            if (nd.inputs[0]->value[i] > 0.0) g[i] += nd.grad[i];
    });
}

Var sigmoid(const Var& x) {
    Tensor out(x->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x->value[i]));
    return make_op(std::move(out), {x}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            double y = nd.value[i];
            g[i] += nd.grad[i] * y * (1.0 - y);
        }
    });
}

Var pow_scalar(const Var& x, double e) {
    Tensor out(x->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = std::pow(x->value[i], e);
    return make_op(std::move(out), {x}, [n, e](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            double v = nd.inputs[0]->value[i];
            double d = (v == 0.0 && e >= 1.0) ? 0.0 : e * std::pow(v, e - 1.0);
            g[i] += nd.grad[i] * d;
        }
    });
}

// --------------------------------------------------------------------- shape

Var reshape(const Var& x, std::vector<int> shape) {
    if (Tensor::numel(shape) != x->value.size())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor out(std::move(shape), x->value.vec());
    const int64_t n = out.size();
    return make_op(std::move(out), {x}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
    });
}

Var permute(const Var& x, std::vector<int> perm) {
    const Tensor& v = x->value;
    const int r = v.rank();
    if (static_cast<int>(perm.size()) != r)
        throw std::invalid_argument("permute: rank mismatch");
    std::vector<int> out_shape(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) out_shape[static_cast<size_t>(i)] = v.dim(perm[static_cast<size_t>(i)]);

    std::vector<int64_t> in_strides(static_cast<size_t>(r), 1);
    for (int i = r - 2; i >= 0; --i)
        in_strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(i + 1)] * v.dim(i + 1);
    // stride of output axis i in the input layout
    auto map_strides = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i)
        (*map_strides)[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];

    Tensor out(out_shape);
    const int64_t n = out.size();
    std::vector<int> idx(static_cast<size_t>(r), 0);
    for (int64_t o = 0; o < n; ++o) {
        int64_t src = 0;
        for (int i = 0; i < r; ++i) src += idx[static_cast<size_t>(i)] * (*map_strides)[static_cast<size_t>(i)];
        out[o] = v[src];
        for (int i = r - 1; i >= 0; --i) {
            if (++idx[static_cast<size_t>(i)] < out_shape[static_cast<size_t>(i)]) break;
            idx[static_cast<size_t>(i)] = 0;
        }
    }
    auto shp = std::make_shared<std::vector<int>>(out_shape);
    return make_op(std::move(out), {x}, [n, r, map_strides, shp](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        std::vector<int> idx(static_cast<size_t>(r), 0);
        for (int64_t o = 0; o < n; ++o) {
            int64_t src = 0;
            for (int i = 0; i < r; ++i) src += idx[static_cast<size_t>(i)] * (*map_strides)[static_cast<size_t>(i)];
            g[src] += nd.grad[o];
            for (int i = r - 1; i >= 0; --i) {
                if (++idx[static_cast<size_t>(i)] < (*shp)[static_cast<size_t>(i)]) break;
                idx[static_cast<size_t>(i)] = 0;
            }
        }
    });
}

Var concat0(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat0: empty input list");
    std::vector<int> shape = xs[0]->value.shape();
    if (shape.empty()) throw std::invalid_argument("concat0: rank-0 input");
    int total0 = 0;
    for (const auto& x : xs) {
        const auto& s = x->value.shape();
        if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1))
            throw std::invalid_argument("concat0: trailing shape mismatch");
        total0 += s[0];
    }
    shape[0] = total0;
    Tensor out(shape);
    int64_t off = 0;
    for (const auto& x : xs) {
        std::copy(x->value.vec().begin(), x->value.vec().end(), out.vec().begin() + off);
        off += x->value.size();
    }
    return make_op(std::move(out), xs, [](Node& nd) {
        int64_t off = 0;
        for (auto& in : nd.inputs) {
            const int64_t n = in->value.size();
            if (in->requires_grad) {
                Tensor& g = in->ensure_grad();
                for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[off + i];
            }
            off += n;
        }
    });
}

Var slice0(const Var& x, int start, int len) {
    const Tensor& v = x->value;
    if (v.rank() < 1 || start < 0 || len < 0 || start + len > v.dim(0))
        throw std::invalid_argument("slice0: range out of bounds");
    std::vector<int> shape = v.shape();
    shape[0] = len;
    const int64_t row = trailing_size(v, 1);
    Tensor out(shape);
    std::copy(v.vec().begin() + start * row, v.vec().begin() + (start + len) * row, out.vec().begin());
    const int64_t n = out.size();
    const int64_t off = start * row;
    return make_op(std::move(out), {x}, [n, off](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[off + i] += nd.grad[i];
    });
}

Var slice_cols(const Var& x, int start, int len) {
    const Tensor& v = x->value;
    if (v.rank() != 2) throw std::invalid_argument("slice_cols: expected rank 2");
    const int m = v.dim(0), cols = v.dim(1);
    if (start < 0 || len < 0 || start + len > cols)
        throw std::invalid_argument("slice_cols: range out of bounds");
    Tensor out({m, len});
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < len; ++c) out[static_cast<int64_t>(r) * len + c] = v[static_cast<int64_t>(r) * cols + start + c];
    return make_op(std::move(out), {x}, [m, cols, start, len](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < len; ++c)
                g[static_cast<int64_t>(r) * cols + start + c] += nd.grad[static_cast<int64_t>(r) * len + c];
    });
}

Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: empty input list");
    const int m = xs[0]->value.dim(0);
    int total = 0;
    for (const auto& x : xs) {
        if (x->value.rank() != 2 || x->value.dim(0) != m)
            throw std::invalid_argument("concat_cols: row count mismatch");
        total += x->value.dim(1);
    }
    Tensor out({m, total});
    int col_off = 0;
    for (const auto& x : xs) {
        const int c = x->value.dim(1);
        for (int r = 0; r < m; ++r)
            for (int j = 0; j < c; ++j)
                out[static_cast<int64_t>(r) * total + col_off + j] = x->value[static_cast<int64_t>(r) * c + j];
        col_off += c;
    }
    return make_op(std::move(out), xs, [m, total](Node& nd) {
        int col_off = 0;
        for (auto& in : nd.inputs) {
            const int c = in->value.dim(1);
            if (in->requires_grad) {
                Tensor& g = in->ensure_grad();
                for (int r = 0; r < m; ++r)
                    for (int j = 0; j < c; ++j)
                        g[static_cast<int64_t>(r) * c + j] += nd.grad[static_cast<int64_t>(r) * total + col_off + j];
            }
            col_off += c;
        }
    });
}

// ----------------------------------------------------------------- broadcast

Var mul_bcast0(const Var& x, const Var& m) {
    const Tensor& xv = x->value;
    const Tensor& mv = m->value;
    if (mv.rank() != xv.rank() || mv.dim(0) != 1)
        throw std::invalid_argument("mul_bcast0: mask must have leading dim 1");
    for (int i = 1; i < xv.rank(); ++i)
        if (mv.dim(i) != xv.dim(i)) throw std::invalid_argument("mul_bcast0: trailing shape mismatch");
    const int C = xv.dim(0);
    const int64_t rest = trailing_size(xv, 1);
    Tensor out(xv.shape());
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < rest; ++i) out[c * rest + i] = xv[c * rest + i] * mv[i];
    return make_op(std::move(out), {x, m}, [C, rest](Node& nd) {
        const Tensor& xv = nd.inputs[0]->value;
        const Tensor& mv = nd.inputs[1]->value;
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();
            for (int c = 0; c < C; ++c)
                for (int64_t i = 0; i < rest; ++i) g[c * rest + i] += nd.grad[c * rest + i] * mv[i];
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();
            for (int c = 0; c < C; ++c)
                for (int64_t i = 0; i < rest; ++i) g[i] += nd.grad[c * rest + i] * xv[c * rest + i];
        }
    });
}

Var add_bias_ch(const Var& x, const Var& b) {
    const Tensor& xv = x->value;
    const int C = xv.dim(0);
    if (b->value.size() != C) throw std::invalid_argument("add_bias_ch: bias size mismatch");
    const int64_t rest = trailing_size(xv, 1);
    Tensor out(xv.shape());
    for (int c = 0; c < C; ++c)
        for (int64_t i = 0; i < rest; ++i) out[c * rest + i] = xv[c * rest + i] + b->value[c];
    return make_op(std::move(out), {x, b}, [C, rest](Node& nd) {
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();
            const int64_t n = C * rest;
            for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();
            for (int c = 0; c < C; ++c) {
                double s = 0.0;
                for (int64_t i = 0; i < rest; ++i) s += nd.grad[c * rest + i];
                g[c] += s;
            }
        }
    });
}

Var add_bias_row(const Var& x, const Var& b) {
    const Tensor& xv = x->value;
    if (xv.rank() != 2) throw std::invalid_argument("add_bias_row: expected rank 2");
    const int m = xv.dim(0), n = xv.dim(1);
    if (b->value.size() != n) throw std::invalid_argument("add_bias_row: bias size mismatch");
    Tensor out(xv.shape());
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) out[static_cast<int64_t>(r) * n + c] = xv[static_cast<int64_t>(r) * n + c] + b->value[c];
    return make_op(std::move(out), {x, b}, [m, n](Node& nd) {
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();
            const int64_t tot = static_cast<int64_t>(m) * n;
            for (int64_t i = 0; i < tot; ++i) g[i] += nd.grad[i];
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();
            for (int c = 0; c < n; ++c) {
                double s = 0.0;
                for (int r = 0; r < m; ++r) s += nd.grad[static_cast<int64_t>(r) * n + c];
                g[c] += s;
            }
        }
    });
}

Var add_const(const Var& x, const Tensor& c) {
    if (!x->value.same_shape(c)) throw std::invalid_argument("add_const: shape mismatch");
    Tensor out(x->value.shape());
    const int64_t n = out.size();
    for (int64_t i = 0; i < n; ++i) out[i] = x->value[i] + c[i];
    return make_op(std::move(out), {x}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[i];
    });
}

Var affine_cols(const Var& x, const Tensor& s, const Tensor& o) {
    const Tensor& xv = x->value;
    if (xv.rank() != 2) throw std::invalid_argument("affine_cols: expected rank 2");
    const int m = xv.dim(0), n = xv.dim(1);
    if (s.size() != n || o.size() != n) throw std::invalid_argument("affine_cols: size mismatch");
    Tensor out(xv.shape());
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
            out[static_cast<int64_t>(r) * n + c] = xv[static_cast<int64_t>(r) * n + c] * s[c] + o[c];
    auto sc = std::make_shared<Tensor>(s);
    return make_op(std::move(out), {x}, [m, n, sc](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c)
                g[static_cast<int64_t>(r) * n + c] += nd.grad[static_cast<int64_t>(r) * n + c] * (*sc)[c];
    });
}

// ------------------------------------------------------------- linear algebra

Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + Tensor::shape_str(av.shape()) +
                                    " x " + Tensor::shape_str(bv.shape()));
    const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        double* orow = out.data() + static_cast<int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double aval = av[static_cast<int64_t>(i) * k + p];
            const double* brow = bv.data() + static_cast<int64_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += aval * brow[j];
        }
    }
    return make_op(std::move(out), {a, b}, [m, k, n](Node& nd) {
        const Tensor& av = nd.inputs[0]->value;
        const Tensor& bv = nd.inputs[1]->value;
        if (nd.inputs[0]->requires_grad) {
            Tensor& g = nd.inputs[0]->ensure_grad();  // dA = G * B^T
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* grow = nd.grad.data() + static_cast<int64_t>(i) * n;
                    const double* brow = bv.data() + static_cast<int64_t>(p) * n;
                    for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                    g[static_cast<int64_t>(i) * k + p] += s;
                }
        }
        if (nd.inputs[1]->requires_grad) {
            Tensor& g = nd.inputs[1]->ensure_grad();  // dB = A^T * G
            for (int p = 0; p < k; ++p) {
                double* grow_out = g.data() + static_cast<int64_t>(p) * n;
                for (int i = 0; i < m; ++i) {
                    const double aval = av[static_cast<int64_t>(i) * k + p];
                    const double* grow = nd.grad.data() + static_cast<int64_t>(i) * n;
                    for (int j = 0; j < n; ++j) grow_out[j] += aval * grow[j];
                }
            }
        }
    });
}

// ----------------------------------------------------------------- row blocks

namespace {
int64_t check_rows(const Tensor& t, int row_len, const char* op) {
    if (row_len <= 0 || t.size() % row_len != 0)
        throw std::invalid_argument(std::string(op) + ": size not divisible by row length");
    return t.size() / row_len;
}
}  // namespace

Var softmax_rows(const Var& x, int row_len) {
    const int64_t rows = check_rows(x->value, row_len, "softmax_rows");
    Tensor out(x->value.shape());
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x->value.data() + r * row_len;
        double* yr = out.data() + r * row_len;
        double mx = xr[0];
        for (int i = 1; i < row_len; ++i) mx = std::max(mx, xr[i]);
        double sum = 0.0;
        for (int i = 0; i < row_len; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            sum += yr[i];
        }
        for (int i = 0; i < row_len; ++i) yr[i] /= sum;
    }
    return make_op(std::move(out), {x}, [rows, row_len](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double* yr = nd.value.data() + r * row_len;
            const double* gr = nd.grad.data() + r * row_len;
            double dot = 0.0;
            for (int i = 0; i < row_len; ++i) dot += yr[i] * gr[i];
            double* gx = g.data() + r * row_len;
            for (int i = 0; i < row_len; ++i) gx[i] += yr[i] * (gr[i] - dot);
        }
    });
}

Var normalize_rows(const Var& x, int row_len) {
    const int64_t rows = check_rows(x->value, row_len, "normalize_rows");
    Tensor out(x->value.shape());
    auto sums = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x->value.data() + r * row_len;
        double s = 0.0;
        for (int i = 0; i < row_len; ++i) s += xr[i];
        if (!(s > 0.0))
            throw std::invalid_argument("normalize_rows: row sum must be positive (all-zero distribution)");
        (*sums)[static_cast<size_t>(r)] = s;
        double* yr = out.data() + r * row_len;
        for (int i = 0; i < row_len; ++i) yr[i] = xr[i] / s;
    }
    return make_op(std::move(out), {x}, [rows, row_len, sums](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double s = (*sums)[static_cast<size_t>(r)];
            const double* yr = nd.value.data() + r * row_len;
            const double* gr = nd.grad.data() + r * row_len;
            double dot = 0.0;
            for (int i = 0; i < row_len; ++i) dot += yr[i] * gr[i];
            double* gx = g.data() + r * row_len;
            for (int i = 0; i < row_len; ++i) gx[i] += (gr[i] - dot) / s;
        }
    });
}

Var reduce_max_rows(const Var& x, int row_len) {
    const int64_t rows = check_rows(x->value, row_len, "reduce_max_rows");
    Tensor out({static_cast<int>(rows)});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x->value.data() + r * row_len;
        int best = 0;
        for (int i = 1; i < row_len; ++i)
            if (xr[i] > xr[best]) best = i;
        (*argmax)[static_cast<size_t>(r)] = best;
        out[r] = xr[best];
    }
    return make_op(std::move(out), {x}, [rows, row_len, argmax](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t r = 0; r < rows; ++r)
            g[r * row_len + (*argmax)[static_cast<size_t>(r)]] += nd.grad[r];
    });
}

Var sum_all(const Var& x) {
    double s = 0.0;
    const int64_t n = x->value.size();
    for (int64_t i = 0; i < n; ++i) s += x->value[i];
    return make_op(Tensor::scalar(s), {x}, [n](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[0];
    });
}

Var mean_all(const Var& x) {
    const int64_t n = x->value.size();
    if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
    return scale(sum_all(x), 1.0 / static_cast<double>(n));
}

Var dot_const(const Var& x, const Tensor& w) {
    if (!x->value.same_shape(w)) throw std::invalid_argument("dot_const: shape mismatch");
    double s = 0.0;
    const int64_t n = x->value.size();
    for (int64_t i = 0; i < n; ++i) s += x->value[i] * w[i];
    auto wc = std::make_shared<Tensor>(w);
    return make_op(Tensor::scalar(s), {x}, [n, wc](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += nd.grad[0] * (*wc)[i];
    });
}

// ---------------------------------------------------------------- resampling

namespace {
struct LinSample {
    int i0, i1;
    double w0, w1;
};

// Continuous coordinate p in "pixel center" space; clamped linear weights.
LinSample lin_sample(double p, int size) {
    LinSample s;
    if (p <= 0.0) {
        s = {0, 0, 1.0, 0.0};
    } else if (p >= size - 1) {
        s = {size - 1, size - 1, 1.0, 0.0};
    } else {
        int i0 = static_cast<int>(std::floor(p));
        double f = p - i0;
        s = {i0, i0 + 1, 1.0 - f, f};
    }
    return s;
}
}  // namespace

Var roi_bilinear(const Var& x, double cx, double cy, double w, double h, int oh, int ow) {
    const Tensor& v = x->value;
    if (v.rank() != 3) throw std::invalid_argument("roi_bilinear: expected (C,H,W)");
    if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("roi_bilinear: degenerate box");
    const int C = v.dim(0), H = v.dim(1), W = v.dim(2);
    auto ys = std::make_shared<std::vector<LinSample>>();
    auto xs = std::make_shared<std::vector<LinSample>>();
    for (int i = 0; i < oh; ++i)
        ys->push_back(lin_sample(cy - h / 2.0 + (i + 0.5) * h / oh - 0.5, H));
    for (int j = 0; j < ow; ++j)
        xs->push_back(lin_sample(cx - w / 2.0 + (j + 0.5) * w / ow - 0.5, W));
    Tensor out({C, oh, ow});
    for (int c = 0; c < C; ++c) {
        const double* plane = v.data() + static_cast<int64_t>(c) * H * W;
        double* oplane = out.data() + static_cast<int64_t>(c) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const LinSample& sy = (*ys)[static_cast<size_t>(i)];
            for (int j = 0; j < ow; ++j) {
                const LinSample& sx = (*xs)[static_cast<size_t>(j)];
                double v00 = plane[static_cast<int64_t>(sy.i0) * W + sx.i0];
                double v01 = plane[static_cast<int64_t>(sy.i0) * W + sx.i1];
                double v10 = plane[static_cast<int64_t>(sy.i1) * W + sx.i0];
                double v11 = plane[static_cast<int64_t>(sy.i1) * W + sx.i1];
                oplane[static_cast<int64_t>(i) * ow + j] =
                    sy.w0 * (sx.w0 * v00 + sx.w1 * v01) + sy.w1 * (sx.w0 * v10 + sx.w1 * v11);
            }
        }
    }
    return make_op(std::move(out), {x}, [C, H, W, oh, ow, ys, xs](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int c = 0; c < C; ++c) {
            double* gplane = g.data() + static_cast<int64_t>(c) * H * W;
            const double* goplane = nd.grad.data() + static_cast<int64_t>(c) * oh * ow;
            for (int i = 0; i < oh; ++i) {
                const LinSample& sy = (*ys)[static_cast<size_t>(i)];
                for (int j = 0; j < ow; ++j) {
                    const LinSample& sx = (*xs)[static_cast<size_t>(j)];
                    const double gv = goplane[static_cast<int64_t>(i) * ow + j];
                    gplane[static_cast<int64_t>(sy.i0) * W + sx.i0] += gv * sy.w0 * sx.w0;
                    gplane[static_cast<int64_t>(sy.i0) * W + sx.i1] += gv * sy.w0 * sx.w1;
                    gplane[static_cast<int64_t>(sy.i1) * W + sx.i0] += gv * sy.w1 * sx.w0;
                    gplane[static_cast<int64_t>(sy.i1) * W + sx.i1] += gv * sy.w1 * sx.w1;
                }
            }
        }
    });
}

Var crop_resize_cols(const Var& x, double t0, double t1, int out_len) {
    const Tensor& v = x->value;
    if (v.rank() != 2) throw std::invalid_argument("crop_resize_cols: expected (C,T)");
    if (!(t1 > t0)) throw std::invalid_argument("crop_resize_cols: zero-length crop");
    const int C = v.dim(0), T = v.dim(1);
    auto ts = std::make_shared<std::vector<LinSample>>();
    for (int j = 0; j < out_len; ++j)
        ts->push_back(lin_sample(t0 + (j + 0.5) * (t1 - t0) / out_len - 0.5, T));
    Tensor out({C, out_len});
    for (int c = 0; c < C; ++c) {
        const double* row = v.data() + static_cast<int64_t>(c) * T;
        double* orow = out.data() + static_cast<int64_t>(c) * out_len;
        for (int j = 0; j < out_len; ++j) {
            const LinSample& s = (*ts)[static_cast<size_t>(j)];
            orow[j] = s.w0 * row[s.i0] + s.w1 * row[s.i1];
        }
    }
    return make_op(std::move(out), {x}, [C, T, out_len, ts](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int c = 0; c < C; ++c) {
            double* grow = g.data() + static_cast<int64_t>(c) * T;
            const double* gout = nd.grad.data() + static_cast<int64_t>(c) * out_len;
            for (int j = 0; j < out_len; ++j) {
                const LinSample& s = (*ts)[static_cast<size_t>(j)];
                grow[s.i0] += gout[j] * s.w0;
                grow[s.i1] += gout[j] * s.w1;
            }
        }
    });
}

Var resample_rows(const Var& x, const std::vector<double>& src_t, const std::vector<double>& dst_t) {
    const Tensor& v = x->value;
    if (v.rank() != 2) throw std::invalid_argument("resample_rows: expected (K,D)");
    const int K = v.dim(0), D = v.dim(1);
    if (K != static_cast<int>(src_t.size()) || K == 0)
        throw std::invalid_argument("resample_rows: source time count mismatch");
    for (size_t i = 1; i < src_t.size(); ++i)
        if (!(src_t[i] > src_t[i - 1]))
            throw std::invalid_argument("resample_rows: source times must be strictly increasing");
    const int T = static_cast<int>(dst_t.size());
    auto samp = std::make_shared<std::vector<LinSample>>();
    for (int t = 0; t < T; ++t) {
        double tt = dst_t[static_cast<size_t>(t)];
        LinSample s;
        if (tt <= src_t.front() || K == 1) {
            s = {0, 0, 1.0, 0.0};
        } else if (tt >= src_t.back()) {
            s = {K - 1, K - 1, 1.0, 0.0};
        } else {
            int k = 0;
            while (src_t[static_cast<size_t>(k + 1)] < tt) ++k;
            double f = (tt - src_t[static_cast<size_t>(k)]) /
                       (src_t[static_cast<size_t>(k + 1)] - src_t[static_cast<size_t>(k)]);
            s = {k, k + 1, 1.0 - f, f};
        }
        samp->push_back(s);
    }
    Tensor out({T, D});
    for (int t = 0; t < T; ++t) {
        const LinSample& s = (*samp)[static_cast<size_t>(t)];
        const double* r0 = v.data() + static_cast<int64_t>(s.i0) * D;
        const double* r1 = v.data() + static_cast<int64_t>(s.i1) * D;
        double* orow = out.data() + static_cast<int64_t>(t) * D;
        for (int d = 0; d < D; ++d) orow[d] = s.w0 * r0[d] + s.w1 * r1[d];
    }
    return make_op(std::move(out), {x}, [T, D, samp](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int t = 0; t < T; ++t) {
            const LinSample& s = (*samp)[static_cast<size_t>(t)];
            const double* gout = nd.grad.data() + static_cast<int64_t>(t) * D;
            double* g0 = g.data() + static_cast<int64_t>(s.i0) * D;
            double* g1 = g.data() + static_cast<int64_t>(s.i1) * D;
            for (int d = 0; d < D; ++d) {
                g0[d] += gout[d] * s.w0;
                g1[d] += gout[d] * s.w1;
            }
        }
    });
}

// -------------------------------------------------------------------- losses

Var bce_logits(const Var& logits, const Tensor& targets, const Tensor& weights) {
    const Tensor& z = logits->value;
    if (!z.same_shape(targets) || !z.same_shape(weights))
        throw std::invalid_argument("bce_logits: shape mismatch");
    const int64_t n = z.size();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double zi = z[i];
        loss += weights[i] * (std::max(zi, 0.0) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi))));
    }
    auto t = std::make_shared<Tensor>(targets);
    auto w = std::make_shared<Tensor>(weights);
    return make_op(Tensor::scalar(loss), {logits}, [n, t, w](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-nd.inputs[0]->value[i]));
            g[i] += nd.grad[0] * (*w)[i] * (p - (*t)[i]);
        }
    });
}

Var ce_rows(const Var& logits, const std::vector<int>& target, const Tensor& weights) {
    const Tensor& z = logits->value;
    if (z.rank() != 2) throw std::invalid_argument("ce_rows: expected (m,n) logits");
    const int m = z.dim(0), n = z.dim(1);
    if (static_cast<int>(target.size()) != m || weights.size() != m)
        throw std::invalid_argument("ce_rows: target/weight count mismatch");
    double loss = 0.0;
    for (int r = 0; r < m; ++r) {
        const int tr = target[static_cast<size_t>(r)];
        if (tr < 0 || weights[r] == 0.0) continue;
        if (tr >= n) throw std::invalid_argument("ce_rows: target out of range");
        const double* row = z.data() + static_cast<int64_t>(r) * n;
        double mx = row[0];
        for (int c = 1; c < n; ++c) mx = std::max(mx, row[c]);
        double lse = 0.0;
        for (int c = 0; c < n; ++c) lse += std::exp(row[c] - mx);
        loss += weights[r] * (std::log(lse) + mx - row[tr]);
    }
    auto tg = std::make_shared<std::vector<int>>(target);
    auto w = std::make_shared<Tensor>(weights);
    return make_op(Tensor::scalar(loss), {logits}, [m, n, tg, w](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int r = 0; r < m; ++r) {
            const int tr = (*tg)[static_cast<size_t>(r)];
            const double wr = (*w)[r];
            if (tr < 0 || wr == 0.0) continue;
            const double* row = nd.inputs[0]->value.data() + static_cast<int64_t>(r) * n;
            double mx = row[0];
            for (int c = 1; c < n; ++c) mx = std::max(mx, row[c]);
            double lse = 0.0;
            for (int c = 0; c < n; ++c) lse += std::exp(row[c] - mx);
            double* grow = g.data() + static_cast<int64_t>(r) * n;
            for (int c = 0; c < n; ++c) {
                double p = std::exp(row[c] - mx) / lse;
                grow[c] += nd.grad[0] * wr * (p - (c == tr ? 1.0 : 0.0));
            }
        }
    });
}

Var smooth_l1(const Var& pred, const Tensor& target, double beta, const Tensor& weights) {
    const Tensor& p = pred->value;
    if (!p.same_shape(target) || !p.same_shape(weights))
        throw std::invalid_argument("smooth_l1: shape mismatch");
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1: beta must be positive");
    const int64_t n = p.size();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = p[i] - target[i];
        const double a = std::abs(d);
        loss += weights[i] * (a < beta ? 0.5 * d * d / beta : a - 0.5 * beta);
    }
    auto t = std::make_shared<Tensor>(target);
    auto w = std::make_shared<Tensor>(weights);
    return make_op(Tensor::scalar(loss), {pred}, [n, beta, t, w](Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& g = nd.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const double d = nd.inputs[0]->value[i] - (*t)[i];
            const double dd = std::abs(d) < beta ? d / beta : (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
            g[i] += nd.grad[0] * (*w)[i] * dd;
        }
    });
}

}  // namespace rfad::nn
