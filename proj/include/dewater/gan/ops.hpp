#pragma once

#include "dewater/gan/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dewater::gan {

namespace detail {

inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    Shape out{};
    for (std::size_t d = 0; d < 4; ++d) {
        if (a[d] == b[d] || b[d] == 1) out[d] = a[d];
        else if (a[d] == 1) out[d] = b[d];
        else throw Error(Errc::ShapeMismatch, std::string(op) + ": cannot broadcast " +
                                                  shape_str(a) + " with " + shape_str(b));
    }
    return out;
}

/// Element strides of s when read against out (0 along broadcast dims).
inline std::array<std::size_t, 4> broadcast_strides(const Shape& s, const Shape& out) {
    std::array<std::size_t, 4> st{};
    std::size_t acc = 1;
    for (int d = 3; d >= 0; --d) {
        const auto u = static_cast<std::size_t>(d);
        st[u] = (s[u] == 1 && out[u] != 1) ? 0 : acc;
        acc *= static_cast<std::size_t>(s[u]);
    }
    return st;
}

template <class F>
void for_each_broadcast(const Shape& out, const std::array<std::size_t, 4>& sa,
                        const std::array<std::size_t, 4>& sb, F&& f) {
    std::size_t o = 0;
    for (int i0 = 0; i0 < out[0]; ++i0)
        for (int i1 = 0; i1 < out[1]; ++i1)
            for (int i2 = 0; i2 < out[2]; ++i2) {
                std::size_t ia = i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
                std::size_t ib = i0 * sb[0] + i1 * sb[1] + i2 * sb[2];
                for (int i3 = 0; i3 < out[3]; ++i3, ++o, ia += sa[3], ib += sb[3]) f(o, ia, ib);
            }
}

enum class BinOp { Add, Sub, Mul, AbsDiff };

inline Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
    const Shape out = broadcast_shape(a.shape(), b.shape(), name);
    const auto sa = broadcast_strides(a.shape(), out);
    const auto sb = broadcast_strides(b.shape(), out);
    std::vector<double> v(numel(out));
    const auto av = a.value();
    const auto bv = b.value();
    for_each_broadcast(out, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        switch (op) {
        case BinOp::Add: v[o] = av[ia] + bv[ib]; break;
        case BinOp::Sub: v[o] = av[ia] - bv[ib]; break;
        case BinOp::Mul: v[o] = av[ia] * bv[ib]; break;
        case BinOp::AbsDiff: v[o] = std::abs(av[ia] - bv[ib]); break;
        }
    });
    return make_result(out, std::move(v), name, {a, b}, [op, out, sa, sb](Node& self) {
        double* ga = parent_grad(self, 0);
        double* gb = parent_grad(self, 1);
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        const auto& g = self.grad;
        for_each_broadcast(out, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
            switch (op) {
            case BinOp::Add:
                if (ga) ga[ia] += g[o];
                if (gb) gb[ib] += g[o];
                break;
            case BinOp::Sub:
                if (ga) ga[ia] += g[o];
                if (gb) gb[ib] -= g[o];
                break;
            case BinOp::Mul:
                if (ga) ga[ia] += g[o] * bv[ib];
                if (gb) gb[ib] += g[o] * av[ia];
                break;
            case BinOp::AbsDiff: {
                const double d = av[ia] - bv[ib];
                const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                if (ga) ga[ia] += g[o] * s;
                if (gb) gb[ib] -= g[o] * s;
                break;
            }
            }
        });
    });
}

/// Elementwise map; dfdx receives (x, y).
template <class F, class D>
Tensor unary(const Tensor& x, const char* name, F f, D dfdx) {
    std::vector<double> v(x.size());
    const auto xv = x.value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(xv[i]);
    return make_result(x.shape(), std::move(v), name, {x}, [dfdx](Node& self) {
        double* gx = parent_grad(self, 0);
        const auto& xv = self.parents[0]->value;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            gx[i] += self.grad[i] * dfdx(xv[i], self.value[i]);
        }
    });
}

} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) { return detail::binary(a, b, detail::BinOp::Add, "add"); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return detail::binary(a, b, detail::BinOp::Sub, "sub"); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return detail::binary(a, b, detail::BinOp::Mul, "mul"); }
/// |a - b| elementwise, with broadcasting.
inline Tensor abs_diff(const Tensor& a, const Tensor& b) {
    return detail::binary(a, b, detail::BinOp::AbsDiff, "abs_diff");
}

inline Tensor scale(const Tensor& x, double c) {
    return detail::unary(x, "scale", [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& x, double c) {
    return detail::unary(x, "add_scalar", [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

inline Tensor relu(const Tensor& x) {
    return detail::unary(x, "relu", [](double v) { return v > 0 ? v : 0.0; },
                         [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& x, double slope = 0.2) {
    return detail::unary(x, "leaky_relu", [slope](double v) { return v > 0 ? v : slope * v; },
                         [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary(x, "sigmoid",
                         [](double v) {
                             return v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                           : std::exp(v) / (1.0 + std::exp(v));
                         },
                         [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
    return detail::unary(x, "tanh", [](double v) { return std::tanh(v); },
                         [](double, double y) { return 1.0 - y * y; });
}

inline Tensor log(const Tensor& x) {
    return detail::unary(x, "log", [](double v) { return std::log(v); },
                         [](double v, double) { return 1.0 / v; });
}

inline Tensor sqrt(const Tensor& x) {
    return detail::unary(x, "sqrt", [](double v) { return std::sqrt(v); },
                         [](double, double y) { return 0.5 / y; });
}

inline Tensor abs(const Tensor& x) {
    return detail::unary(x, "abs", [](double v) { return std::abs(v); },
                         [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

inline Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.value()) s += v;
    return detail::make_result({1, 1, 1, 1}, {s}, "sum", {x}, [](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        const double g = self.grad[0];
        for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) gx[i] += g;
    });
}

inline Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

/// Mean over one axis, keeping it with extent 1.
inline Tensor mean_axis(const Tensor& x, int axis) {
    const Shape in = x.shape();
    Shape out = in;
    out[static_cast<std::size_t>(axis)] = 1;
    const auto so = detail::broadcast_strides(out, in);
    const std::array<std::size_t, 4> id{static_cast<std::size_t>(in[1]) * in[2] * in[3],
                                        static_cast<std::size_t>(in[2]) * in[3],
                                        static_cast<std::size_t>(in[3]), 1};
    const double inv = 1.0 / in[static_cast<std::size_t>(axis)];
    std::vector<double> v(numel(out), 0.0);
    const auto xv = x.value();
    detail::for_each_broadcast(in, id, so, [&](std::size_t, std::size_t ix, std::size_t io) {
        v[io] += xv[ix] * inv;
    });
    return detail::make_result(out, std::move(v), "mean_axis", {x}, [in, id, so, inv](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        detail::for_each_broadcast(in, id, so, [&](std::size_t, std::size_t ix, std::size_t io) {
            gx[ix] += self.grad[io] * inv;
        });
    });
}

/// Sum over every axis except the batch axis: (N,C,H,W) -> (N,1,1,1).
inline Tensor sum_per_sample(const Tensor& x) {
    const Shape in = x.shape();
    const std::size_t per = numel(in) / static_cast<std::size_t>(in[0]);
    std::vector<double> v(static_cast<std::size_t>(in[0]), 0.0);
    const auto xv = x.value();
    for (std::size_t n = 0; n < v.size(); ++n)
        for (std::size_t i = 0; i < per; ++i) v[n] += xv[n * per + i];
    return detail::make_result({in[0], 1, 1, 1}, std::move(v), "sum_per_sample", {x}, [per](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t n = 0; n < self.grad.size(); ++n)
            for (std::size_t i = 0; i < per; ++i) gx[n * per + i] += self.grad[n];
    });
}

inline Tensor reshape(const Tensor& x, const Shape& shape) {
    if (numel(shape) != x.size()) {
        throw Error(Errc::ShapeMismatch, "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
    }
    std::vector<double> v(x.value().begin(), x.value().end());
    return detail::make_result(shape, std::move(v), "reshape", {x}, [](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    });
}

/// Swaps the last two axes.
inline Tensor transpose(const Tensor& x) {
    const Shape in = x.shape();
    const Shape out{in[0], in[1], in[3], in[2]};
    const std::size_t outer = static_cast<std::size_t>(in[0]) * in[1];
    const auto r = static_cast<std::size_t>(in[2]), c = static_cast<std::size_t>(in[3]);
    std::vector<double> v(x.size());
    const auto xv = x.value();
    for (std::size_t b = 0; b < outer; ++b)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) v[b * r * c + j * r + i] = xv[b * r * c + i * c + j];
    return detail::make_result(out, std::move(v), "transpose", {x}, [outer, r, c](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t b = 0; b < outer; ++b)
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gx[b * r * c + i * c + j] += self.grad[b * r * c + j * r + i];
    });
}

/**
 * Batched matrix product over the last two axes; the two leading axes
 * broadcast, so a (1,1,K,P) weight multiplies every (N,C,M,K) batch.
 */
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    const Shape sa = a.shape(), sb = b.shape();
    if (sa[3] != sb[2]) {
        throw Error(Errc::ShapeMismatch, "matmul inner dims " + shape_str(sa) + " x " + shape_str(sb));
    }
    const Shape lead = detail::broadcast_shape({sa[0], sa[1], 1, 1}, {sb[0], sb[1], 1, 1}, "matmul");
    const Shape out{lead[0], lead[1], sa[2], sb[3]};
    const auto M = static_cast<std::size_t>(sa[2]), K = static_cast<std::size_t>(sa[3]),
               P = static_cast<std::size_t>(sb[3]);
    auto batch_offset = [](const Shape& s, int i0, int i1) {
        const int j0 = s[0] == 1 ? 0 : i0, j1 = s[1] == 1 ? 0 : i1;
        return (static_cast<std::size_t>(j0) * s[1] + j1) * s[2] * s[3];
    };
    std::vector<double> v(numel(out), 0.0);
    const auto av = a.value(), bv = b.value();
    for (int i0 = 0; i0 < out[0]; ++i0)
        for (int i1 = 0; i1 < out[1]; ++i1) {
            const double* A = av.data() + batch_offset(sa, i0, i1);
            const double* B = bv.data() + batch_offset(sb, i0, i1);
            double* C = v.data() + (static_cast<std::size_t>(i0) * out[1] + i1) * M * P;
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t k = 0; k < K; ++k) {
                    const double s = A[m * K + k];
                    for (std::size_t p = 0; p < P; ++p) C[m * P + p] += s * B[k * P + p];
                }
        }
    return detail::make_result(out, std::move(v), "matmul", {a, b}, [=](Node& self) {
        double* ga = detail::parent_grad(self, 0);
        double* gb = detail::parent_grad(self, 1);
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        for (int i0 = 0; i0 < out[0]; ++i0)
            for (int i1 = 0; i1 < out[1]; ++i1) {
                const double* A = av.data() + batch_offset(sa, i0, i1);
                const double* B = bv.data() + batch_offset(sb, i0, i1);
                const double* G = self.grad.data() + (static_cast<std::size_t>(i0) * out[1] + i1) * M * P;
                if (ga) {
                    double* GA = ga + batch_offset(sa, i0, i1);
                    for (std::size_t m = 0; m < M; ++m)
                        for (std::size_t k = 0; k < K; ++k) {
                            double s = 0.0;
                            for (std::size_t p = 0; p < P; ++p) s += G[m * P + p] * B[k * P + p];
                            GA[m * K + k] += s;
                        }
                }
                if (gb) {
                    double* GB = gb + batch_offset(sb, i0, i1);
                    for (std::size_t m = 0; m < M; ++m)
                        for (std::size_t k = 0; k < K; ++k) {
                            const double s = A[m * K + k];
                            for (std::size_t p = 0; p < P; ++p) GB[k * P + p] += s * G[m * P + p];
                        }
                }
            }
    });
}

/// Softmax along the last axis.
inline Tensor softmax(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.dim(3));
    const std::size_t rows = x.size() / n;
    std::vector<double> v(x.size());
    const auto xv = x.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * n;
        double* y = v.data() + r * n;
        const double mx = *std::max_element(in, in + n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (y[i] = std::exp(in[i] - mx));
        for (std::size_t i = 0; i < n; ++i) y[i] /= s;
    }
    return detail::make_result(x.shape(), std::move(v), "softmax", {x}, [n, rows](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
            for (std::size_t i = 0; i < n; ++i) gx[r * n + i] += y[i] * (g[i] - dot);
        }
    });
}

/// Normalises the last axis to zero mean and unit variance (no affine part).
inline Tensor layer_norm(const Tensor& x, double eps = 1e-5) {
    const auto n = static_cast<std::size_t>(x.dim(3));
    const std::size_t rows = x.size() / n;
    std::vector<double> v(x.size());
    std::vector<double> inv_std(rows);
    const auto xv = x.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * n;
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += in[i];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (in[i] - mu) * (in[i] - mu);
        var /= static_cast<double>(n);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < n; ++i) v[r * n + i] = (in[i] - mu) * inv_std[r];
    }
    return detail::make_result(x.shape(), std::move(v), "layer_norm", {x},
                               [n, rows, inv_std = std::move(inv_std)](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xh = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double mg = 0.0, mgx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mg += g[i];
                mgx += g[i] * xh[i];
            }
            mg /= static_cast<double>(n);
            mgx /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) gx[r * n + i] += inv_std[r] * (g[i] - mg - xh[i] * mgx);
        }
    });
}

/**
 * 2-D cross-correlation. x: (N,Ci,H,W), w: (Co,Ci,k,k), bias: (1,Co,1,1).
 * Zero padding; output extent (H + 2 pad - k) / stride + 1.
 */
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride = 1, int pad = 0) {
    const Shape xs = x.shape(), ws = w.shape();
    if (xs[1] != ws[1] || ws[2] != ws[3] || bias.shape() != Shape{1, ws[0], 1, 1} || stride < 1) {
        throw Error(Errc::ShapeMismatch, "conv2d: x " + shape_str(xs) + " w " + shape_str(ws) +
                                             " b " + shape_str(bias.shape()));
    }
    const int N = xs[0], Ci = xs[1], H = xs[2], W = xs[3], Co = ws[0], K = ws[2];
    const int OH = (H + 2 * pad - K) / stride + 1, OW = (W + 2 * pad - K) / stride + 1;
    if (OH <= 0 || OW <= 0) throw Error(Errc::ShapeMismatch, "conv2d: kernel larger than input");
    const Shape out{N, Co, OH, OW};

    // Valid output column range for kernel column kx: 0 <= ox*stride + kx - pad < W.
    auto ox_range = [=](int kx, int& lo, int& hi) {
        lo = std::max(0, (pad - kx + stride - 1) / stride);
        hi = std::min(OW, (W - 1 + pad - kx) / stride + 1);
        if (W - 1 + pad - kx < 0) hi = 0;
    };

    std::vector<double> v(numel(out));
    const auto xv = x.value(), wv = w.value(), bv = bias.value();
    const std::size_t plane_in = static_cast<std::size_t>(H) * W, plane_out = static_cast<std::size_t>(OH) * OW;
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Co; ++co) {
            double* o = v.data() + (static_cast<std::size_t>(n) * Co + co) * plane_out;
            std::fill(o, o + plane_out, bv[static_cast<std::size_t>(co)]);
            for (int ci = 0; ci < Ci; ++ci) {
                const double* in = xv.data() + (static_cast<std::size_t>(n) * Ci + ci) * plane_in;
                const double* wk = wv.data() + (static_cast<std::size_t>(co) * Ci + ci) * K * K;
                for (int ky = 0; ky < K; ++ky)
                    for (int kx = 0; kx < K; ++kx) {
                        const double wt = wk[ky * K + kx];
                        int lo, hi;
                        ox_range(kx, lo, hi);
                        for (int oy = 0; oy < OH; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            if (iy < 0 || iy >= H) continue;
                            const double* row = in + static_cast<std::size_t>(iy) * W + kx - pad;
                            double* orow = o + static_cast<std::size_t>(oy) * OW;
                            if (stride == 1) {
                                for (int ox = lo; ox < hi; ++ox) orow[ox] += wt * row[ox];
                            } else {
                                for (int ox = lo; ox < hi; ++ox) orow[ox] += wt * row[ox * stride];
                            }
                        }
                    }
            }
        }

    return detail::make_result(out, std::move(v), "conv2d", {x, w, bias}, [=](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        double* gw = detail::parent_grad(self, 1);
        double* gb = detail::parent_grad(self, 2);
        const auto& xv = self.parents[0]->value;
        const auto& wv = self.parents[1]->value;
        for (int n = 0; n < N; ++n)
            for (int co = 0; co < Co; ++co) {
                const double* g = self.grad.data() + (static_cast<std::size_t>(n) * Co + co) * plane_out;
                if (gb) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < plane_out; ++i) s += g[i];
                    gb[co] += s;
                }
                for (int ci = 0; ci < Ci; ++ci) {
                    const std::size_t in_off = (static_cast<std::size_t>(n) * Ci + ci) * plane_in;
                    const double* in = xv.data() + in_off;
                    const std::size_t w_off = (static_cast<std::size_t>(co) * Ci + ci) * K * K;
                    for (int ky = 0; ky < K; ++ky)
                        for (int kx = 0; kx < K; ++kx) {
                            const double wt = wv[w_off + ky * K + kx];
                            int lo, hi;
                            ox_range(kx, lo, hi);
                            double acc = 0.0;
                            for (int oy = 0; oy < OH; ++oy) {
                                const int iy = oy * stride + ky - pad;
                                if (iy < 0 || iy >= H) continue;
                                const std::size_t roff = static_cast<std::size_t>(iy) * W + kx - pad;
                                const double* grow = g + static_cast<std::size_t>(oy) * OW;
                                if (stride == 1) {
                                    const double* row = in + roff;
                                    for (int ox = lo; ox < hi; ++ox) acc += grow[ox] * row[ox];
                                    if (gx) {
                                        double* grow_in = gx + in_off + roff;
                                        for (int ox = lo; ox < hi; ++ox) grow_in[ox] += wt * grow[ox];
                                    }
                                } else {
                                    const double* row = in + roff;
                                    for (int ox = lo; ox < hi; ++ox) acc += grow[ox] * row[ox * stride];
                                    if (gx) {
                                        double* grow_in = gx + in_off + roff;
                                        for (int ox = lo; ox < hi; ++ox) grow_in[ox * stride] += wt * grow[ox];
                                    }
                                }
                            }
                            if (gw) gw[w_off + ky * K + kx] += acc;
                        }
                }
            }
    });
}

/// Nearest-neighbour upsampling by an integer factor on the two spatial axes.
inline Tensor upsample_nearest(const Tensor& x, int factor = 2) {
    const Shape in = x.shape();
    const Shape out{in[0], in[1], in[2] * factor, in[3] * factor};
    const std::size_t planes = static_cast<std::size_t>(in[0]) * in[1];
    const auto H = static_cast<std::size_t>(in[2]), W = static_cast<std::size_t>(in[3]);
    const auto OH = H * factor, OW = W * factor;
    std::vector<double> v(numel(out));
    const auto xv = x.value();
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t y = 0; y < OH; ++y)
            for (std::size_t xx = 0; xx < OW; ++xx)
                v[p * OH * OW + y * OW + xx] = xv[p * H * W + (y / factor) * W + xx / factor];
    return detail::make_result(out, std::move(v), "upsample_nearest", {x}, [=](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t p = 0; p < planes; ++p)
            for (std::size_t y = 0; y < OH; ++y)
                for (std::size_t xx = 0; xx < OW; ++xx)
                    gx[p * H * W + (y / factor) * W + xx / factor] += self.grad[p * OH * OW + y * OW + xx];
    });
}

/// Concatenation along the channel axis.
inline Tensor concat(const Tensor& a, const Tensor& b) {
    const Shape sa = a.shape(), sb = b.shape();
    if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
        throw Error(Errc::ShapeMismatch, "concat " + shape_str(sa) + " with " + shape_str(sb));
    }
    const Shape out{sa[0], sa[1] + sb[1], sa[2], sa[3]};
    const std::size_t na = static_cast<std::size_t>(sa[1]) * sa[2] * sa[3];
    const std::size_t nb = static_cast<std::size_t>(sb[1]) * sb[2] * sb[3];
    std::vector<double> v;
    v.reserve(numel(out));
    const auto av = a.value(), bv = b.value();
    for (int n = 0; n < sa[0]; ++n) {
        v.insert(v.end(), av.begin() + n * na, av.begin() + (n + 1) * na);
        v.insert(v.end(), bv.begin() + n * nb, bv.begin() + (n + 1) * nb);
    }
    return detail::make_result(out, std::move(v), "concat", {a, b}, [=](Node& self) {
        double* ga = detail::parent_grad(self, 0);
        double* gb = detail::parent_grad(self, 1);
        for (int n = 0; n < sa[0]; ++n) {
            const double* g = self.grad.data() + n * (na + nb);
            if (ga) for (std::size_t i = 0; i < na; ++i) ga[n * na + i] += g[i];
            if (gb) for (std::size_t i = 0; i < nb; ++i) gb[n * nb + i] += g[na + i];
        }
    });
}

/// Forward difference along width (axis 3) or height (axis 2); zero on the last column/row.
inline Tensor forward_diff(const Tensor& x, int axis) {
    if (axis != 2 && axis != 3) throw Error(Errc::ShapeMismatch, "forward_diff axis must be 2 or 3");
    const Shape s = x.shape();
    const std::size_t planes = static_cast<std::size_t>(s[0]) * s[1];
    const auto H = static_cast<std::size_t>(s[2]), W = static_cast<std::size_t>(s[3]);
    const std::size_t step = axis == 3 ? 1 : W;
    auto has_next = [=](std::size_t y, std::size_t xx) { return axis == 3 ? xx + 1 < W : y + 1 < H; };
    std::vector<double> v(x.size(), 0.0);
    const auto xv = x.value();
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t xx = 0; xx < W; ++xx) {
                const std::size_t i = p * H * W + y * W + xx;
                if (has_next(y, xx)) v[i] = xv[i + step] - xv[i];
            }
    return detail::make_result(s, std::move(v), "forward_diff", {x}, [=](Node& self) {
        double* gx = detail::parent_grad(self, 0);
        for (std::size_t p = 0; p < planes; ++p)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t xx = 0; xx < W; ++xx) {
                    const std::size_t i = p * H * W + y * W + xx;
                    if (!has_next(y, xx)) continue;
                    gx[i + step] += self.grad[i];
                    gx[i] -= self.grad[i];
                }
    });
}

inline constexpr double kBceClamp = 1e-7;

/**
 * Mean binary cross-entropy of probabilities p against a constant label.
 * Probabilities are clamped to [eps, 1-eps]; the gradient is zero where the clamp is active.
 */
inline Tensor bce_with_clamp(const Tensor& p, double label) {
    const double n = static_cast<double>(p.size());
    double s = 0.0;
    for (double v : p.value()) {
        const double c = std::clamp(v, kBceClamp, 1.0 - kBceClamp);
        s -= label * std::log(c) + (1.0 - label) * std::log(1.0 - c);
    }
    return detail::make_result({1, 1, 1, 1}, {s / n}, "bce_with_clamp", {p}, [label, n](Node& self) {
        double* gp = detail::parent_grad(self, 0);
        const auto& pv = self.parents[0]->value;
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double v = pv[i];
            if (v < kBceClamp || v > 1.0 - kBceClamp) continue;
            gp[i] += self.grad[0] * (-(label / v) + (1.0 - label) / (1.0 - v)) / n;
        }
    });
}

} // namespace dewater::gan
