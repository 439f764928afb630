// AVX2+FMA backend. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a runtime CPU check.

#include "fxlearn/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define FXL_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#endif

#include <cmath>
#include <cstddef>

namespace fxl::kernels {

#ifdef FXL_HAVE_AVX2_BUILD

namespace {

template <class T>
struct V;

template <>
struct V<float> {
    using reg = __m256;
    static constexpr std::size_t width = 8;
    static reg load(const float* p) { return _mm256_loadu_ps(p); }
    static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
    static reg set1(float v) { return _mm256_set1_ps(v); }
    static reg zero() { return _mm256_setzero_ps(); }
    static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
    static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
    static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
    static reg max(reg a, reg b) { return _mm256_max_ps(a, b); }
    static reg abs(reg a) { return _mm256_andnot_ps(_mm256_set1_ps(-0.0f), a); }
    static float reduce_add(reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
        lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
        return _mm_cvtss_f32(lo);
    }
    static float reduce_max(reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_max_ps(lo, hi);
        lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
        lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
        return _mm_cvtss_f32(lo);
    }
    static bool finite(reg v) {
        // x*0 == 0 only for finite x
        reg z = _mm256_mul_ps(v, _mm256_setzero_ps());
        reg m = _mm256_cmp_ps(z, _mm256_setzero_ps(), _CMP_EQ_OQ);
        return _mm256_movemask_ps(m) == 0xff;
    }
};

template <>
struct V<double> {
    using reg = __m256d;
    static constexpr std::size_t width = 4;
    static reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
    static reg set1(double v) { return _mm256_set1_pd(v); }
    static reg zero() { return _mm256_setzero_pd(); }
    static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
    static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
    static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
    static reg max(reg a, reg b) { return _mm256_max_pd(a, b); }
    static reg abs(reg a) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), a); }
    static double reduce_add(reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
        return _mm_cvtsd_f64(lo);
    }
    static double reduce_max(reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_max_pd(lo, hi);
        lo = _mm_max_sd(lo, _mm_unpackhi_pd(lo, lo));
        return _mm_cvtsd_f64(lo);
    }
    static bool finite(reg v) {
        reg z = _mm256_mul_pd(v, _mm256_setzero_pd());
        reg m = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_EQ_OQ);
        return _mm256_movemask_pd(m) == 0xf;
    }
};

template <class T>
void add_v(const T* a, const T* b, T* out, std::size_t n) {
    using W = V<T>;
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) W::store(out + i, W::add(W::load(a + i), W::load(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void sub_v(const T* a, const T* b, T* out, std::size_t n) {
    using W = V<T>;
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) W::store(out + i, W::sub(W::load(a + i), W::load(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void mul_v(const T* a, const T* b, T* out, std::size_t n) {
    using W = V<T>;
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) W::store(out + i, W::mul(W::load(a + i), W::load(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void axpy_v(T alpha, const T* x, T* y, std::size_t n) {
    using W = V<T>;
    typename W::reg va = W::set1(alpha);
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) W::store(y + i, W::fmadd(va, W::load(x + i), W::load(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale_v(T alpha, T* x, std::size_t n) {
    using W = V<T>;
    typename W::reg va = W::set1(alpha);
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) W::store(x + i, W::mul(va, W::load(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

template <class T>
T dot_v(const T* a, const T* b, std::size_t n) {
    using W = V<T>;
    typename W::reg acc0 = W::zero(), acc1 = W::zero();
    std::size_t i = 0;
    for (; i + 2 * W::width <= n; i += 2 * W::width) {
        acc0 = W::fmadd(W::load(a + i), W::load(b + i), acc0);
        acc1 = W::fmadd(W::load(a + i + W::width), W::load(b + i + W::width), acc1);
    }
    for (; i + W::width <= n; i += W::width) acc0 = W::fmadd(W::load(a + i), W::load(b + i), acc0);
    T acc = W::reduce_add(W::add(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
T sum_v(const T* a, std::size_t n) {
    using W = V<T>;
    typename W::reg acc = W::zero();
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) acc = W::add(acc, W::load(a + i));
    T s = W::reduce_add(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

template <class T>
T abs_sum_v(const T* a, std::size_t n) {
    using W = V<T>;
    typename W::reg acc = W::zero();
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) acc = W::add(acc, W::abs(W::load(a + i)));
    T s = W::reduce_add(acc);
    for (; i < n; ++i) s += std::abs(a[i]);
    return s;
}

template <class T>
T max_abs_v(const T* a, std::size_t n) {
    using W = V<T>;
    typename W::reg acc = W::zero();
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) acc = W::max(acc, W::abs(W::load(a + i)));
    T s = W::reduce_max(acc);
    for (; i < n; ++i) s = std::max(s, std::abs(a[i]));
    return s;
}

template <class T>
bool all_finite_v(const T* a, std::size_t n) {
    using W = V<T>;
    std::size_t i = 0;
    for (; i + W::width <= n; i += W::width) {
        if (!W::finite(W::load(a + i))) return false;
    }
    for (; i < n; ++i) {
        if (!std::isfinite(a[i])) return false;
    }
    return true;
}

// C[i,:] += sum_p a(i,p) * B_row(p,:), p unrolled by 4
template <class T, bool TransA>
void gemm_stream_rows(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
                      std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    using W = V<T>;
    auto a_at = [&](std::size_t i, std::size_t p) { return TransA ? a[p * lda + i] : a[i * lda + p]; };
    const std::size_t nv = n / W::width * W::width;
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            typename W::reg a0 = W::set1(alpha * a_at(i, p + 0));
            typename W::reg a1 = W::set1(alpha * a_at(i, p + 1));
            typename W::reg a2 = W::set1(alpha * a_at(i, p + 2));
            typename W::reg a3 = W::set1(alpha * a_at(i, p + 3));
            const T* b0 = b + (p + 0) * ldb;
            const T* b1 = b + (p + 1) * ldb;
            const T* b2 = b + (p + 2) * ldb;
            const T* b3 = b + (p + 3) * ldb;
            std::size_t j = 0;
            for (; j < nv; j += W::width) {
                typename W::reg cv = W::load(crow + j);
                cv = W::fmadd(a0, W::load(b0 + j), cv);
                cv = W::fmadd(a1, W::load(b1 + j), cv);
                cv = W::fmadd(a2, W::load(b2 + j), cv);
                cv = W::fmadd(a3, W::load(b3 + j), cv);
                W::store(crow + j, cv);
            }
            for (; j < n; ++j) {
                crow[j] += alpha * (a_at(i, p) * b0[j - 0] + a_at(i, p + 1) * b1[j] +
                                    a_at(i, p + 2) * b2[j] + a_at(i, p + 3) * b3[j]);
            }
        }
        for (; p < k; ++p) {
            typename W::reg av = W::set1(alpha * a_at(i, p));
            const T* brow = b + p * ldb;
            std::size_t j = 0;
            for (; j < nv; j += W::width) W::store(crow + j, W::fmadd(av, W::load(brow + j), W::load(crow + j)));
            for (; j < n; ++j) crow[j] += alpha * a_at(i, p) * brow[j];
        }
    }
}

// C[i,j] += alpha * dot(A_row(i,:), B_row(j,:)); j unrolled by 4
template <class T>
void gemm_nt_v(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a, std::size_t lda,
               const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    using W = V<T>;
    const std::size_t kv = k / W::width * W::width;
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * lda;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const T* b0 = b + (j + 0) * ldb;
            const T* b1 = b + (j + 1) * ldb;
            const T* b2 = b + (j + 2) * ldb;
            const T* b3 = b + (j + 3) * ldb;
            typename W::reg s0 = W::zero(), s1 = W::zero(), s2 = W::zero(), s3 = W::zero();
            std::size_t p = 0;
            for (; p < kv; p += W::width) {
                typename W::reg av = W::load(arow + p);
                s0 = W::fmadd(av, W::load(b0 + p), s0);
                s1 = W::fmadd(av, W::load(b1 + p), s1);
                s2 = W::fmadd(av, W::load(b2 + p), s2);
                s3 = W::fmadd(av, W::load(b3 + p), s3);
            }
            T d0 = W::reduce_add(s0), d1 = W::reduce_add(s1), d2 = W::reduce_add(s2), d3 = W::reduce_add(s3);
            for (; p < k; ++p) {
                d0 += arow[p] * b0[p];
                d1 += arow[p] * b1[p];
                d2 += arow[p] * b2[p];
                d3 += arow[p] * b3[p];
            }
            c[i * ldc + j + 0] += alpha * d0;
            c[i * ldc + j + 1] += alpha * d1;
            c[i * ldc + j + 2] += alpha * d2;
            c[i * ldc + j + 3] += alpha * d3;
        }
        for (; j < n; ++j) {
            c[i * ldc + j] += alpha * dot_v<T>(arow, b + j * ldb, k);
        }
    }
}

template <class T>
void gemm_v(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
            const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
    if (beta != T(1)) {
        for (std::size_t i = 0; i < m; ++i) {
            if (beta == T(0)) {
                for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = T(0);
            } else {
                scale_v(beta, c + i * ldc, n);
            }
        }
    }
    if (m == 0 || n == 0 || k == 0 || alpha == T(0)) return;
    if (!trans_b) {
        if (trans_a) {
            gemm_stream_rows<T, true>(m, n, k, alpha, a, lda, b, ldb, c, ldc);
        } else {
            gemm_stream_rows<T, false>(m, n, k, alpha, a, lda, b, ldb, c, ldc);
        }
    } else if (!trans_a) {
        gemm_nt_v(m, n, k, alpha, a, lda, b, ldb, c, ldc);
    } else {
        // TT is cold; reuse the scalar reference
        scalar_table<T>().gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, T(1), c, ldc);
    }
}

}  // namespace

template <class T>
const Table<T>* avx2_table() {
    static const Table<T> table = {
        &add_v<T>,     &sub_v<T>,     &mul_v<T>,     &axpy_v<T>,       &scale_v<T>,
        &dot_v<T>,     &sum_v<T>,     &abs_sum_v<T>, &max_abs_v<T>,    &all_finite_v<T>,
        &gemm_v<T>,    "avx2",
    };
    return cpu_has_avx2() ? &table : nullptr;
}

#else  // !FXL_HAVE_AVX2_BUILD

template <class T>
const Table<T>* avx2_table() {
    return nullptr;
}

#endif

template const Table<float>* avx2_table<float>();
template const Table<double>* avx2_table<double>();

}  // namespace fxl::kernels
