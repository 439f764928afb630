#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fxlearn/errors.hpp"
#include "fxlearn/kernels.hpp"
#include "fxlearn/tensor.hpp"

namespace fxl::ad {

// Reverse-mode autodiff over whole tensors. Each op builds a Node holding the
// forward value and a closure that routes the node's gradient into its
// parents. backward() walks the graph in reverse topological order.
//
// Every op validates its output for NaN/Inf unless finite checks are turned
// off (they are on by default; the check is a single vectorized pass).

inline bool& finite_checks_flag() {
    static bool enabled = true;
    return enabled;
}
inline void set_finite_checks(bool on) { finite_checks_flag() = on; }

template <class T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated on demand; same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> backprop;
    const char* op = "leaf";

    void ensure_grad() {
        if (grad.size() != value.size()) {
            grad = Tensor<T>(value.shape);
        }
    }
    void zero_grad() {
        if (grad.size() == value.size()) grad.fill(T(0));
    }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return n;
}

template <class T>
Var<T> scalar_leaf(T v) {
    Tensor<T> t({1});
    t.data[0] = v;
    return leaf(std::move(t));
}

namespace detail {

template <class T>
Var<T> make_op(const char* name, Tensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backprop) {
    if (finite_checks_flag() && !all_finite(value)) {
        raise_numeric(std::string("non-finite value produced by op '") + name + "'");
    }
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->op = name;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    n->requires_grad = needs;
    n->parents = std::move(parents);
    if (needs) n->backprop = std::move(backprop);
    return n;
}

template <class T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
    if (!a->value.same_shape(b->value)) {
        raise_shape(std::string(op) + ": shape mismatch " + shape_str(a->value) + " vs " + shape_str(b->value));
    }
}

// outer/inner split around an axis, for block copies
inline std::pair<std::size_t, std::size_t> outer_inner(const std::vector<std::size_t>& shape, std::size_t axis) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    return {outer, inner};
}

}  // namespace detail

// ---- elementwise ----

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    detail::require_same_shape("add", a, b);
    Tensor<T> out(a->value.shape);
    kernels::active<T>().add(a->value.ptr(), b->value.ptr(), out.ptr(), out.size());
    return detail::make_op<T>("add", std::move(out), {a, b}, [a, b](Node<T>& n) {
        if (a->requires_grad) {
            a->ensure_grad();
            kernels::active<T>().axpy(T(1), n.grad.ptr(), a->grad.ptr(), n.grad.size());
        }
        if (b->requires_grad) {
            b->ensure_grad();
            kernels::active<T>().axpy(T(1), n.grad.ptr(), b->grad.ptr(), n.grad.size());
        }
    });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    detail::require_same_shape("sub", a, b);
    Tensor<T> out(a->value.shape);
    kernels::active<T>().sub(a->value.ptr(), b->value.ptr(), out.ptr(), out.size());
    return detail::make_op<T>("sub", std::move(out), {a, b}, [a, b](Node<T>& n) {
        if (a->requires_grad) {
            a->ensure_grad();
            kernels::active<T>().axpy(T(1), n.grad.ptr(), a->grad.ptr(), n.grad.size());
        }
        if (b->requires_grad) {
            b->ensure_grad();
            kernels::active<T>().axpy(T(-1), n.grad.ptr(), b->grad.ptr(), n.grad.size());
        }
    });
}

template <class T>
Var<T> hadamard(Var<T> a, Var<T> b) {
    detail::require_same_shape("hadamard", a, b);
    Tensor<T> out(a->value.shape);
    kernels::active<T>().mul(a->value.ptr(), b->value.ptr(), out.ptr(), out.size());
    return detail::make_op<T>("hadamard", std::move(out), {a, b}, [a, b](Node<T>& n) {
        const std::size_t sz = n.grad.size();
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < sz; ++i) a->grad.data[i] += n.grad.data[i] * b->value.data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < sz; ++i) b->grad.data[i] += n.grad.data[i] * a->value.data[i];
        }
    });
}

template <class T>
Var<T> scale(Var<T> a, T c) {
    Tensor<T> out = a->value;
    kernels::active<T>().scale(c, out.ptr(), out.size());
    return detail::make_op<T>("scale", std::move(out), {a}, [a, c](Node<T>& n) {
        a->ensure_grad();
        kernels::active<T>().axpy(c, n.grad.ptr(), a->grad.ptr(), n.grad.size());
    });
}

template <class T>
Var<T> add_const(Var<T> a, T c) {
    Tensor<T> out = a->value;
    for (auto& v : out.data) v += c;
    return detail::make_op<T>("add_const", std::move(out), {a}, [a](Node<T>& n) {
        a->ensure_grad();
        kernels::active<T>().axpy(T(1), n.grad.ptr(), a->grad.ptr(), n.grad.size());
    });
}

template <class T>
Var<T> elu(Var<T> x) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T v = x->value.data[i];
        out.data[i] = v >= T(0) ? v : static_cast<T>(std::expm1(static_cast<double>(v)));
    }
    return detail::make_op<T>("elu", std::move(out), {x}, [x](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T v = x->value.data[i];
            const T d = v >= T(0) ? T(1) : n.value.data[i] + T(1);  // e^v
            x->grad.data[i] += n.grad.data[i] * d;
        }
    });
}

// log(cosh(x)) in the overflow-safe form |x| - ln2 + log1p(e^{-2|x|})
template <class T>
Var<T> logcosh(Var<T> x) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double a = std::abs(static_cast<double>(x->value.data[i]));
        out.data[i] = static_cast<T>(a - 0.6931471805599453 + std::log1p(std::exp(-2.0 * a)));
    }
    return detail::make_op<T>("logcosh", std::move(out), {x}, [x](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            x->grad.data[i] += n.grad.data[i] * static_cast<T>(std::tanh(static_cast<double>(x->value.data[i])));
        }
    });
}

template <class T>
Var<T> abs_op(Var<T> x) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::abs(x->value.data[i]);
    return detail::make_op<T>("abs", std::move(out), {x}, [x](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T v = x->value.data[i];
            const T s = v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
            x->grad.data[i] += n.grad.data[i] * s;
        }
    });
}

// sqrt(x + eps^2); derivative bounded by 1/(2*eps)
template <class T>
Var<T> sqrt_eps(Var<T> x, T eps) {
    Tensor<T> out(x->value.shape);
    const T e2 = eps * eps;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = std::sqrt(x->value.data[i] + e2);
    return detail::make_op<T>("sqrt_eps", std::move(out), {x}, [x](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            x->grad.data[i] += n.grad.data[i] / (T(2) * n.value.data[i]);
        }
    });
}

// ---- shape ops ----

template <class T>
Var<T> concat(Var<T> a, Var<T> b, std::size_t axis) {
    if (a->value.rank() != b->value.rank()) raise_shape("concat: rank mismatch");
    if (axis >= a->value.rank()) raise_shape("concat: axis out of range");
    for (std::size_t i = 0; i < a->value.rank(); ++i) {
        if (i != axis && a->value.shape[i] != b->value.shape[i]) {
            raise_shape("concat: shape mismatch " + shape_str(a->value) + " vs " + shape_str(b->value));
        }
    }
    std::vector<std::size_t> oshape = a->value.shape;
    oshape[axis] += b->value.shape[axis];
    const auto [outer, inner] = detail::outer_inner(a->value.shape, axis);
    const std::size_t wa = a->value.shape[axis] * inner;
    const std::size_t wb = b->value.shape[axis] * inner;
    Tensor<T> out(oshape);
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(a->value.ptr() + o * wa, wa, out.ptr() + o * (wa + wb));
        std::copy_n(b->value.ptr() + o * wb, wb, out.ptr() + o * (wa + wb) + wa);
    }
    return detail::make_op<T>("concat", std::move(out), {a, b}, [a, b, outer, wa, wb](Node<T>& n) {
        for (std::size_t o = 0; o < outer; ++o) {
            const T* g = n.grad.ptr() + o * (wa + wb);
            if (a->requires_grad) {
                a->ensure_grad();
                kernels::active<T>().axpy(T(1), g, a->grad.ptr() + o * wa, wa);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                kernels::active<T>().axpy(T(1), g + wa, b->grad.ptr() + o * wb, wb);
            }
        }
    });
}

template <class T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= x->value.rank()) raise_shape("slice: axis out of range");
    if (start + len > x->value.shape[axis]) raise_shape("slice: range exceeds axis extent");
    std::vector<std::size_t> oshape = x->value.shape;
    oshape[axis] = len;
    const auto [outer, inner] = detail::outer_inner(x->value.shape, axis);
    const std::size_t wx = x->value.shape[axis] * inner;
    const std::size_t wo = len * inner;
    const std::size_t off = start * inner;
    Tensor<T> out(oshape);
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(x->value.ptr() + o * wx + off, wo, out.ptr() + o * wo);
    }
    return detail::make_op<T>("slice", std::move(out), {x}, [x, outer, wx, wo, off](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t o = 0; o < outer; ++o) {
            kernels::active<T>().axpy(T(1), n.grad.ptr() + o * wo, x->grad.ptr() + o * wx + off, wo);
        }
    });
}

// repeat a [B, n] tensor along a new middle axis -> [B, rows, n]
template <class T>
Var<T> broadcast_rows(Var<T> k, std::size_t rows) {
    if (k->value.rank() != 2) raise_shape("broadcast_rows: expected rank-2 input");
    const std::size_t b = k->value.shape[0], n = k->value.shape[1];
    Tensor<T> out({b, rows, n});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(k->value.ptr() + i * n, n, out.ptr() + (i * rows + r) * n);
        }
    }
    return detail::make_op<T>("broadcast_rows", std::move(out), {k}, [k, b, rows, n](Node<T>& nd) {
        k->ensure_grad();
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t r = 0; r < rows; ++r) {
                kernels::active<T>().axpy(T(1), nd.grad.ptr() + (i * rows + r) * n, k->grad.ptr() + i * n, n);
            }
        }
    });
}

// ---- constant-coefficient ops ----

// out[b,c,f] = w[c] * x[b,c,f]; w is a fixed coefficient vector
template <class T>
Var<T> scale_bins(Var<T> x, Tensor<T> w) {
    if (x->value.rank() != 3 || w.rank() != 1 || w.shape[0] != x->value.shape[1]) {
        raise_shape("scale_bins: expected [B,C,F] with C-length weights");
    }
    const std::size_t b = x->value.shape[0], c = x->value.shape[1], f = x->value.shape[2];
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const T* xp = x->value.ptr() + (i * c + j) * f;
            T* op = out.ptr() + (i * c + j) * f;
            for (std::size_t t = 0; t < f; ++t) op[t] = w.data[j] * xp[t];
        }
    }
    auto wp = std::make_shared<Tensor<T>>(std::move(w));
    return detail::make_op<T>("scale_bins", std::move(out), {x}, [x, wp, b, c, f](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                kernels::active<T>().axpy(wp->data[j], n.grad.ptr() + (i * c + j) * f,
                                          x->grad.ptr() + (i * c + j) * f, f);
            }
        }
    });
}

// out[b,s] = x[b,s] / c[s]; c is a fixed positive vector (overlap coverage)
template <class T>
Var<T> div_by_vector(Var<T> x, Tensor<T> c) {
    if (x->value.rank() != 2 || c.rank() != 1 || c.shape[0] != x->value.shape[1]) {
        raise_shape("div_by_vector: expected [B,S] with S-length divisor");
    }
    const std::size_t b = x->value.shape[0], s = x->value.shape[1];
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t t = 0; t < s; ++t) out.data[i * s + t] = x->value.data[i * s + t] / c.data[t];
    }
    auto cp = std::make_shared<Tensor<T>>(std::move(c));
    return detail::make_op<T>("div_by_vector", std::move(out), {x}, [x, cp, b, s](Node<T>& n) {
        x->ensure_grad();
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t t = 0; t < s; ++t) x->grad.data[i * s + t] += n.grad.data[i * s + t] / cp->data[t];
        }
    });
}

// ---- reductions ----

template <class T>
Var<T> mean(Var<T> x) {
    const std::size_t sz = x->value.size();
    if (sz == 0) raise_shape("mean: empty tensor");
    Tensor<T> out({1});
    out.data[0] = kernels::active<T>().sum(x->value.ptr(), sz) / static_cast<T>(sz);
    return detail::make_op<T>("mean", std::move(out), {x}, [x, sz](Node<T>& n) {
        x->ensure_grad();
        const T g = n.grad.data[0] / static_cast<T>(sz);
        for (std::size_t i = 0; i < sz; ++i) x->grad.data[i] += g;
    });
}

// ---- affine ----

// x[..., w_in] @ w[w_in, w_out] + b[w_out]
template <class T>
Var<T> affine(Var<T> x, Var<T> w, Var<T> b) {
    if (x->value.rank() < 1 || w->value.rank() != 2 || b->value.rank() != 1) {
        raise_shape("affine: expected x[...,k], w[k,n], b[n]");
    }
    const std::size_t k = w->value.shape[0], n = w->value.shape[1];
    if (x->value.shape.back() != k || b->value.shape[0] != n) {
        raise_shape("affine: inner dimensions disagree, x=" + shape_str(x->value) + " w=" + shape_str(w->value));
    }
    const std::size_t rows = x->value.size() / k;
    std::vector<std::size_t> oshape = x->value.shape;
    oshape.back() = n;
    Tensor<T> out(oshape);
    kernels::active<T>().gemm(false, false, rows, n, k, T(1), x->value.ptr(), k, w->value.ptr(), n,
                              T(0), out.ptr(), n);
    for (std::size_t r = 0; r < rows; ++r) {
        kernels::active<T>().axpy(T(1), b->value.ptr(), out.ptr() + r * n, n);
    }
    return detail::make_op<T>("affine", std::move(out), {x, w, b}, [x, w, b, rows, k, n](Node<T>& nd) {
        if (w->requires_grad) {
            w->ensure_grad();
            kernels::active<T>().gemm(true, false, k, n, rows, T(1), x->value.ptr(), k,
                                      nd.grad.ptr(), n, T(1), w->grad.ptr(), n);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                kernels::active<T>().axpy(T(1), nd.grad.ptr() + r * n, b->grad.ptr(), n);
            }
        }
        if (x->requires_grad) {
            x->ensure_grad();
            kernels::active<T>().gemm(false, true, rows, k, n, T(1), nd.grad.ptr(), n,
                                      w->value.ptr(), n, T(1), x->grad.ptr(), k);
        }
    });
}

// ---- strided 1-D convolution bank ----

inline std::size_t conv_frame_count(std::size_t length, std::size_t frame, std::size_t hop) {
    if (length < frame) raise_shape("conv1d: input shorter than frame");
    if (hop == 0) raise_shape("conv1d: hop must be >= 1");
    return (length - frame) / hop + 1;
}

// x[B,L] * k[C,frame] at stride hop -> out[B,C,F]
template <class T>
Var<T> conv1d(Var<T> x, Var<T> k, std::size_t hop) {
    if (x->value.rank() != 2 || k->value.rank() != 2) raise_shape("conv1d: expected x[B,L], k[C,frame]");
    const std::size_t batch = x->value.shape[0], length = x->value.shape[1];
    const std::size_t c = k->value.shape[0], frame = k->value.shape[1];
    const std::size_t f = conv_frame_count(length, frame, hop);
    Tensor<T> out({batch, c, f});
    // im2col buffer kept for the backward pass
    auto col = std::make_shared<Tensor<T>>(std::vector<std::size_t>{batch, f, frame});
    for (std::size_t ib = 0; ib < batch; ++ib) {
        const T* xb = x->value.ptr() + ib * length;
        T* cb = col->ptr() + ib * f * frame;
        for (std::size_t j = 0; j < f; ++j) std::copy_n(xb + j * hop, frame, cb + j * frame);
        // out_b[C,F] = k[C,frame] . col_b[F,frame]^T
        kernels::active<T>().gemm(false, true, c, f, frame, T(1), k->value.ptr(), frame, cb, frame,
                                  T(0), out.ptr() + ib * c * f, f);
    }
    return detail::make_op<T>("conv1d", std::move(out), {x, k},
                              [x, k, col, batch, length, c, f, frame, hop](Node<T>& nd) {
        std::vector<T> dcol(f * frame);
        for (std::size_t ib = 0; ib < batch; ++ib) {
            const T* gb = nd.grad.ptr() + ib * c * f;
            const T* cb = col->ptr() + ib * f * frame;
            if (k->requires_grad) {
                k->ensure_grad();
                // dk[C,frame] += g_b[C,F] . col_b[F,frame]
                kernels::active<T>().gemm(false, false, c, frame, f, T(1), gb, f, cb, frame, T(1),
                                          k->grad.ptr(), frame);
            }
            if (x->requires_grad) {
                x->ensure_grad();
                // dcol[F,frame] = g_b[C,F]^T . k[C,frame], then scatter back
                kernels::active<T>().gemm(true, false, f, frame, c, T(1), gb, f, k->value.ptr(),
                                          frame, T(0), dcol.data(), frame);
                T* dxb = x->grad.ptr() + ib * length;
                for (std::size_t j = 0; j < f; ++j) {
                    kernels::active<T>().axpy(T(1), dcol.data() + j * frame, dxb + j * hop, frame);
                }
            }
        }
    });
}

// Adjoint of conv1d with respect to x: planes p[B,C,F] and kernels k[C,frame]
// overlap-add into a span of (F-1)*hop + frame samples.
template <class T>
Var<T> conv1d_transpose(Var<T> p, Var<T> k, std::size_t hop) {
    if (p->value.rank() != 3 || k->value.rank() != 2) raise_shape("conv1d_transpose: expected p[B,C,F], k[C,frame]");
    if (p->value.shape[1] != k->value.shape[0]) raise_shape("conv1d_transpose: channel count mismatch");
    if (hop == 0) raise_shape("conv1d_transpose: hop must be >= 1");
    const std::size_t batch = p->value.shape[0], c = p->value.shape[1], f = p->value.shape[2];
    const std::size_t frame = k->value.shape[1];
    const std::size_t span = (f - 1) * hop + frame;
    Tensor<T> out({batch, span});
    std::vector<T> contrib(f * frame);
    for (std::size_t ib = 0; ib < batch; ++ib) {
        // contrib[F,frame] = p_b[C,F]^T . k[C,frame]
        kernels::active<T>().gemm(true, false, f, frame, c, T(1), p->value.ptr() + ib * c * f, f,
                                  k->value.ptr(), frame, T(0), contrib.data(), frame);
        T* ob = out.ptr() + ib * span;
        for (std::size_t j = 0; j < f; ++j) {
            kernels::active<T>().axpy(T(1), contrib.data() + j * frame, ob + j * hop, frame);
        }
    }
    return detail::make_op<T>("conv1d_transpose", std::move(out), {p, k},
                              [p, k, batch, c, f, frame, hop, span](Node<T>& nd) {
        std::vector<T> dcontrib(f * frame);
        for (std::size_t ib = 0; ib < batch; ++ib) {
            const T* gb = nd.grad.ptr() + ib * span;
            for (std::size_t j = 0; j < f; ++j) {
                std::copy_n(gb + j * hop, frame, dcontrib.data() + j * frame);
            }
            if (p->requires_grad) {
                p->ensure_grad();
                // dp_b[C,F] += k[C,frame] . dcontrib[F,frame]^T
                kernels::active<T>().gemm(false, true, c, f, frame, T(1), k->value.ptr(), frame,
                                          dcontrib.data(), frame, T(1), p->grad.ptr() + ib * c * f, f);
            }
            if (k->requires_grad) {
                k->ensure_grad();
                // dk[C,frame] += p_b[C,F] . dcontrib[F,frame]
                kernels::active<T>().gemm(false, false, c, frame, f, T(1), p->value.ptr() + ib * c * f,
                                          f, dcontrib.data(), frame, T(1), k->grad.ptr(), frame);
            }
        }
    });
}

// ---- fused spectral ops ----

// (re, im) -> (sqrt(re^2 + im^2 + eps^2), atan2(im, re)). Phase gradients use
// the eps-stabilized denominator so silent inputs stay loss-safe.
template <class T>
std::pair<Var<T>, Var<T>> mag_phase(Var<T> re, Var<T> im, T eps) {
    detail::require_same_shape("mag_phase", re, im);
    const std::size_t sz = re->value.size();
    Tensor<T> mag(re->value.shape), ph(re->value.shape);
    for (std::size_t i = 0; i < sz; ++i) {
        const T r = re->value.data[i], m = im->value.data[i];
        mag.data[i] = std::sqrt(r * r + m * m + eps * eps);
        ph.data[i] = std::atan2(m, r);
    }
    auto mag_node = detail::make_op<T>("magnitude", std::move(mag), {re, im}, [re, im](Node<T>& n) {
        const bool dre = re->requires_grad, dim = im->requires_grad;
        if (dre) re->ensure_grad();
        if (dim) im->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T g = n.grad.data[i] / n.value.data[i];
            if (dre) re->grad.data[i] += g * re->value.data[i];
            if (dim) im->grad.data[i] += g * im->value.data[i];
        }
    });
    auto ph_node = detail::make_op<T>("phase", std::move(ph), {re, im}, [re, im, eps](Node<T>& n) {
        const bool dre = re->requires_grad, dim = im->requires_grad;
        if (dre) re->ensure_grad();
        if (dim) im->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T r = re->value.data[i], m = im->value.data[i];
            const T denom = r * r + m * m + eps * eps;
            if (dre) re->grad.data[i] += n.grad.data[i] * (-m / denom);
            if (dim) im->grad.data[i] += n.grad.data[i] * (r / denom);
        }
    });
    return {mag_node, ph_node};
}

// (mag, phase) -> (mag*cos(phase), mag*sin(phase))
template <class T>
std::pair<Var<T>, Var<T>> polar_to_rect(Var<T> mag, Var<T> ph) {
    detail::require_same_shape("polar_to_rect", mag, ph);
    const std::size_t sz = mag->value.size();
    Tensor<T> re(mag->value.shape), im(mag->value.shape);
    for (std::size_t i = 0; i < sz; ++i) {
        re.data[i] = mag->value.data[i] * std::cos(ph->value.data[i]);
        im.data[i] = mag->value.data[i] * std::sin(ph->value.data[i]);
    }
    auto re_node = detail::make_op<T>("polar_re", std::move(re), {mag, ph}, [mag, ph](Node<T>& n) {
        const bool dm = mag->requires_grad, dp = ph->requires_grad;
        if (dm) mag->ensure_grad();
        if (dp) ph->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T c = std::cos(ph->value.data[i]), s = std::sin(ph->value.data[i]);
            if (dm) mag->grad.data[i] += n.grad.data[i] * c;
            if (dp) ph->grad.data[i] += n.grad.data[i] * (-mag->value.data[i] * s);
        }
    });
    auto im_node = detail::make_op<T>("polar_im", std::move(im), {mag, ph}, [mag, ph](Node<T>& n) {
        const bool dm = mag->requires_grad, dp = ph->requires_grad;
        if (dm) mag->ensure_grad();
        if (dp) ph->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T c = std::cos(ph->value.data[i]), s = std::sin(ph->value.data[i]);
            if (dm) mag->grad.data[i] += n.grad.data[i] * s;
            if (dp) ph->grad.data[i] += n.grad.data[i] * (mag->value.data[i] * c);
        }
    });
    return {re_node, im_node};
}

// ---- backward driver ----

template <class T>
void backward(const Var<T>& root) {
    if (root->value.size() != 1) raise_shape("backward: root must be scalar");
    // iterative post-order topological sort
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node<T>* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad.data[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop) {
            n->ensure_grad();
            n->backprop(*n);
        }
    }
}

}  // namespace fxl::ad
