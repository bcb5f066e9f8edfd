#include "rfad/nn/ops.hpp"

#include <stdexcept>
#include <thread>

namespace rfad::nn {

namespace {

// Runs fn over contiguous chunks of [0,n). Chunking never changes results:
// every accumulation target belongs to exactly one chunk, and the iteration
// order inside a chunk equals the serial order.
template <typename Fn>
void parallel_chunks(int n, int64_t work, const Fn& fn) {
    static const int hw = std::max(1u, std::thread::hardware_concurrency());
    const int threads = std::min({4, hw, n});
    if (threads <= 1 || work < (1 << 16)) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads - 1));
    for (int t = 1; t < threads; ++t)
        pool.emplace_back([&fn, n, t, threads] {
            fn(static_cast<int64_t>(n) * t / threads,
               static_cast<int64_t>(n) * (t + 1) / threads);
        });
    fn(0, static_cast<int64_t>(n) / threads);
    for (auto& th : pool) th.join();
}

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

inline int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Output index range [lo,hi) such that o*stride + off lands inside [0,in_size).
inline void out_range(int in_size, int off, int stride, int out_size, int& lo, int& hi) {
    lo = std::max(0, ceil_div(-off, stride));
    hi = std::min(out_size, floor_div(in_size - 1 - off, stride) + 1);
    if (hi < lo) hi = lo;
}

inline int conv_out(int in, int k, int stride, int pad) {
    const int o = (in + 2 * pad - k) / stride + 1;
    if (o <= 0) throw std::invalid_argument("conv: output dimension would be empty");
    return o;
}

}  // namespace

// ------------------------------------------------------------------- conv2d

Var conv2d(const Var& x, const Var& w, const Var& b, std::array<int, 2> stride, std::array<int, 2> pad) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (xv.rank() != 3 || wv.rank() != 4)
        throw std::invalid_argument("conv2d: expected x(C,H,W), w(Co,Ci,Kh,Kw)");
    const int Ci = xv.dim(0), H = xv.dim(1), W = xv.dim(2);
    const int Co = wv.dim(0), Kh = wv.dim(2), Kw = wv.dim(3);
    if (wv.dim(1) != Ci) throw std::invalid_argument("conv2d: channel mismatch");
    if (b && b->value.size() != Co) throw std::invalid_argument("conv2d: bias size mismatch");
    const int sh = stride[0], sw = stride[1], ph = pad[0], pw = pad[1];
    const int Ho = conv_out(H, Kh, sh, ph), Wo = conv_out(W, Kw, sw, pw);

    Tensor out({Co, Ho, Wo});
    for (int oc = 0; oc < Co; ++oc) {
        double* oplane = out.data() + static_cast<int64_t>(oc) * Ho * Wo;
        if (b) {
            const double bias = b->value[oc];
            for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) oplane[i] = bias;
        }
        for (int ic = 0; ic < Ci; ++ic) {
            const double* xplane = xv.data() + static_cast<int64_t>(ic) * H * W;
            for (int ky = 0; ky < Kh; ++ky) {
                int ylo, yhi;
                out_range(H, ky - ph, sh, Ho, ylo, yhi);
                for (int kx = 0; kx < Kw; ++kx) {
                    const double wval = wv[((static_cast<int64_t>(oc) * Ci + ic) * Kh + ky) * Kw + kx];
                    int xlo, xhi;
                    out_range(W, kx - pw, sw, Wo, xlo, xhi);
                    for (int oy = ylo; oy < yhi; ++oy) {
                        const double* xrow = xplane + static_cast<int64_t>(oy * sh - ph + ky) * W + (kx - pw);
                        double* orow = oplane + static_cast<int64_t>(oy) * Wo;
                        for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wval * xrow[ox * sw];
                    }
                }
            }
        }
    }

    std::vector<Var> inputs = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_op(std::move(out), std::move(inputs),
                   [Ci, H, W, Co, Kh, Kw, sh, sw, ph, pw, Ho, Wo](Node& nd) {
        const Tensor& xv = nd.inputs[0]->value;
        const Tensor& wv = nd.inputs[1]->value;
        const bool need_dx = nd.inputs[0]->requires_grad;
        const bool need_dw = nd.inputs[1]->requires_grad;
        Tensor* dx = need_dx ? &nd.inputs[0]->ensure_grad() : nullptr;
        Tensor* dw = need_dw ? &nd.inputs[1]->ensure_grad() : nullptr;
        if (nd.inputs.size() > 2 && nd.inputs[2]->requires_grad) {
            Tensor& db = nd.inputs[2]->ensure_grad();
            for (int oc = 0; oc < Co; ++oc) {
                const double* gplane = nd.grad.data() + static_cast<int64_t>(oc) * Ho * Wo;
                double s = 0.0;
                for (int64_t i = 0; i < static_cast<int64_t>(Ho) * Wo; ++i) s += gplane[i];
                db[oc] += s;
            }
        }
        if (!need_dx && !need_dw) return;
        for (int oc = 0; oc < Co; ++oc) {
            const double* gplane = nd.grad.data() + static_cast<int64_t>(oc) * Ho * Wo;
            for (int ic = 0; ic < Ci; ++ic) {
                const double* xplane = xv.data() + static_cast<int64_t>(ic) * H * W;
                double* dxplane = need_dx ? dx->data() + static_cast<int64_t>(ic) * H * W : nullptr;
                for (int ky = 0; ky < Kh; ++ky) {
                    int ylo, yhi;
                    out_range(H, ky - ph, sh, Ho, ylo, yhi);
                    for (int kx = 0; kx < Kw; ++kx) {
                        int xlo, xhi;
                        out_range(W, kx - pw, sw, Wo, xlo, xhi);
                        const int64_t widx = ((static_cast<int64_t>(oc) * Ci + ic) * Kh + ky) * Kw + kx;
                        const double wval = wv[widx];
                        double wacc = 0.0;
                        for (int oy = ylo; oy < yhi; ++oy) {
                            const int64_t xoff = static_cast<int64_t>(oy * sh - ph + ky) * W + (kx - pw);
                            const double* grow = gplane + static_cast<int64_t>(oy) * Wo;
                            if (need_dw) {
                                const double* xrow = xplane + xoff;
                                for (int ox = xlo; ox < xhi; ++ox) wacc += grow[ox] * xrow[ox * sw];
                            }
                            if (need_dx) {
                                double* dxrow = dxplane + xoff;
                                for (int ox = xlo; ox < xhi; ++ox) dxrow[ox * sw] += wval * grow[ox];
                            }
                        }
                        if (need_dw) (*dw)[widx] += wacc;
                    }
                }
            }
        }
    });
}

// ------------------------------------------------------------------- conv3d

Var conv3d(const Var& x, const Var& w, const Var& b, std::array<int, 3> stride, std::array<int, 3> pad) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (xv.rank() != 4 || wv.rank() != 5)
        throw std::invalid_argument("conv3d: expected x(C,T,H,W), w(Co,Ci,Kt,Kh,Kw)");
    const int Ci = xv.dim(0), T = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const int Co = wv.dim(0), Kt = wv.dim(2), Kh = wv.dim(3), Kw = wv.dim(4);
    if (wv.dim(1) != Ci) throw std::invalid_argument("conv3d: channel mismatch");
    if (b && b->value.size() != Co) throw std::invalid_argument("conv3d: bias size mismatch");
    const int st = stride[0], sh = stride[1], sw = stride[2];
    const int pt = pad[0], ph = pad[1], pw = pad[2];
    const int To = conv_out(T, Kt, st, pt), Ho = conv_out(H, Kh, sh, ph), Wo = conv_out(W, Kw, sw, pw);

    Tensor out({Co, To, Ho, Wo});
    const int64_t ovol = static_cast<int64_t>(To) * Ho * Wo;
    const int64_t work = ovol * Ci * Kt * Kh * Kw * Co;
    // output channels are independent: safe to compute in parallel chunks
    parallel_chunks(Co, work, [&](int oc_lo, int oc_hi) {
        for (int oc = oc_lo; oc < oc_hi; ++oc) {
            double* ovolp = out.data() + static_cast<int64_t>(oc) * ovol;
            if (b) {
                const double bias = b->value[oc];
                for (int64_t i = 0; i < ovol; ++i) ovolp[i] = bias;
            }
            for (int ic = 0; ic < Ci; ++ic) {
                const double* xvol = xv.data() + static_cast<int64_t>(ic) * T * H * W;
                for (int kt = 0; kt < Kt; ++kt) {
                    int tlo, thi;
                    out_range(T, kt - pt, st, To, tlo, thi);
                    for (int ky = 0; ky < Kh; ++ky) {
                        int ylo, yhi;
                        out_range(H, ky - ph, sh, Ho, ylo, yhi);
                        for (int kx = 0; kx < Kw; ++kx) {
                            const double wval =
                                wv[(((static_cast<int64_t>(oc) * Ci + ic) * Kt + kt) * Kh + ky) * Kw + kx];
                            int xlo, xhi;
                            out_range(W, kx - pw, sw, Wo, xlo, xhi);
                            for (int ot = tlo; ot < thi; ++ot) {
                                const double* xslab = xvol + static_cast<int64_t>(ot * st - pt + kt) * H * W;
                                double* oslab = ovolp + static_cast<int64_t>(ot) * Ho * Wo;
                                for (int oy = ylo; oy < yhi; ++oy) {
                                    const double* xrow =
                                        xslab + static_cast<int64_t>(oy * sh - ph + ky) * W + (kx - pw);
                                    double* orow = oslab + static_cast<int64_t>(oy) * Wo;
                                    for (int ox = xlo; ox < xhi; ++ox) orow[ox] += wval * xrow[ox * sw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });

    std::vector<Var> inputs = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_op(std::move(out), std::move(inputs),
                   [Ci, T, H, W, Co, Kt, Kh, Kw, st, sh, sw, pt, ph, pw, To, Ho, Wo](Node& nd) {
        const Tensor& xv = nd.inputs[0]->value;
        const Tensor& wv = nd.inputs[1]->value;
        const bool need_dx = nd.inputs[0]->requires_grad;
        const bool need_dw = nd.inputs[1]->requires_grad;
        Tensor* dx = need_dx ? &nd.inputs[0]->ensure_grad() : nullptr;
        Tensor* dw = need_dw ? &nd.inputs[1]->ensure_grad() : nullptr;
        const int64_t ovol = static_cast<int64_t>(To) * Ho * Wo;
        const int64_t work = ovol * Ci * Kt * Kh * Kw * Co;
        if (nd.inputs.size() > 2 && nd.inputs[2]->requires_grad) {
            Tensor& db = nd.inputs[2]->ensure_grad();
            for (int oc = 0; oc < Co; ++oc) {
                const double* gvol = nd.grad.data() + static_cast<int64_t>(oc) * ovol;
                double s = 0.0;
                for (int64_t i = 0; i < ovol; ++i) s += gvol[i];
                db[oc] += s;
            }
        }
        // dW chunks by output channel, dX by input channel: each pass owns its
        // accumulation targets exclusively and keeps the serial inner order.
        if (need_dw)
            parallel_chunks(Co, work, [&](int oc_lo, int oc_hi) {
                for (int oc = oc_lo; oc < oc_hi; ++oc) {
                    const double* gvol = nd.grad.data() + static_cast<int64_t>(oc) * ovol;
                    for (int ic = 0; ic < Ci; ++ic) {
                        const double* xvol = xv.data() + static_cast<int64_t>(ic) * T * H * W;
                        for (int kt = 0; kt < Kt; ++kt) {
                            int tlo, thi;
                            out_range(T, kt - pt, st, To, tlo, thi);
                            for (int ky = 0; ky < Kh; ++ky) {
                                int ylo, yhi;
                                out_range(H, ky - ph, sh, Ho, ylo, yhi);
                                for (int kx = 0; kx < Kw; ++kx) {
                                    int xlo, xhi;
                                    out_range(W, kx - pw, sw, Wo, xlo, xhi);
                                    const int64_t widx =
                                        (((static_cast<int64_t>(oc) * Ci + ic) * Kt + kt) * Kh + ky) * Kw +
                                        kx;
                                    double wacc = 0.0;
                                    for (int ot = tlo; ot < thi; ++ot) {
                                        const int64_t slab_off =
                                            static_cast<int64_t>(ot * st - pt + kt) * H * W;
                                        const double* gslab = gvol + static_cast<int64_t>(ot) * Ho * Wo;
                                        for (int oy = ylo; oy < yhi; ++oy) {
                                            const int64_t xoff = slab_off +
                                                                 static_cast<int64_t>(oy * sh - ph + ky) * W +
                                                                 (kx - pw);
                                            const double* grow = gslab + static_cast<int64_t>(oy) * Wo;
                                            const double* xrow = xvol + xoff;
                                            for (int ox = xlo; ox < xhi; ++ox)
                                                wacc += grow[ox] * xrow[ox * sw];
                                        }
                                    }
                                    (*dw)[widx] += wacc;
                                }
                            }
                        }
                    }
                }
            });
        if (need_dx)
            parallel_chunks(Ci, work, [&](int ic_lo, int ic_hi) {
                for (int ic = ic_lo; ic < ic_hi; ++ic) {
                    double* dxvol = dx->data() + static_cast<int64_t>(ic) * T * H * W;
                    for (int oc = 0; oc < Co; ++oc) {
                        const double* gvol = nd.grad.data() + static_cast<int64_t>(oc) * ovol;
                        for (int kt = 0; kt < Kt; ++kt) {
                            int tlo, thi;
                            out_range(T, kt - pt, st, To, tlo, thi);
                            for (int ky = 0; ky < Kh; ++ky) {
                                int ylo, yhi;
                                out_range(H, ky - ph, sh, Ho, ylo, yhi);
                                for (int kx = 0; kx < Kw; ++kx) {
                                    int xlo, xhi;
                                    out_range(W, kx - pw, sw, Wo, xlo, xhi);
                                    const double wval =
                                        wv[(((static_cast<int64_t>(oc) * Ci + ic) * Kt + kt) * Kh + ky) *
                                               Kw +
                                           kx];
                                    for (int ot = tlo; ot < thi; ++ot) {
                                        const int64_t slab_off =
                                            static_cast<int64_t>(ot * st - pt + kt) * H * W;
                                        const double* gslab = gvol + static_cast<int64_t>(ot) * Ho * Wo;
                                        for (int oy = ylo; oy < yhi; ++oy) {
                                            const int64_t xoff = slab_off +
                                                                 static_cast<int64_t>(oy * sh - ph + ky) * W +
                                                                 (kx - pw);
                                            const double* grow = gslab + static_cast<int64_t>(oy) * Wo;
                                            double* dxrow = dxvol + xoff;
                                            for (int ox = xlo; ox < xhi; ++ox)
                                                dxrow[ox * sw] += wval * grow[ox];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            });
    });
}

}  // namespace rfad::nn
