#include "fxlearn/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace fxl::kernels {
namespace {

template <class T>
void add_s(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void sub_s(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void mul_s(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void axpy_s(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale_s(T alpha, T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
T dot_s(const T* a, const T* b, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <class T>
T sum_s(const T* a, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

template <class T>
T abs_sum_s(const T* a, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i]);
    return acc;
}

template <class T>
T max_abs_s(const T* a, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc = std::max(acc, std::abs(a[i]));
    return acc;
}

template <class T>
bool all_finite_s(const T* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(a[i])) return false;
    }
    return true;
}

template <class T>
void gemm_s(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
            T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
            T beta, T* c, std::size_t ldc) {
    auto a_at = [&](std::size_t i, std::size_t p) { return trans_a ? a[p * lda + i] : a[i * lda + p]; };
    auto b_at = [&](std::size_t p, std::size_t j) { return trans_b ? b[j * ldb + p] : b[p * ldb + j]; };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) acc += a_at(i, p) * b_at(p, j);
            c[i * ldc + j] = beta * c[i * ldc + j] + alpha * acc;
        }
    }
}

}  // namespace

template <class T>
const Table<T>& scalar_table() {
    static const Table<T> table = {
        &add_s<T>,     &sub_s<T>,     &mul_s<T>,     &axpy_s<T>,       &scale_s<T>,
        &dot_s<T>,     &sum_s<T>,     &abs_sum_s<T>, &max_abs_s<T>,    &all_finite_s<T>,
        &gemm_s<T>,    "scalar",
    };
    return table;
}

template const Table<float>& scalar_table<float>();
template const Table<double>& scalar_table<double>();

}  // namespace fxl::kernels
