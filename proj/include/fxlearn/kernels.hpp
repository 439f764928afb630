#pragma once

#include <cstddef>
#include <string>

namespace fxl::kernels {

// Data-parallel arithmetic primitives behind the tensor ops. Two backends:
// a scalar reference implementation and an AVX2+FMA variant compiled in a
// separate translation unit. The active backend is selected once at runtime;
// the FXLEARN_KERNELS environment variable ("scalar", "avx2", "auto")
// overrides autodetection. Backends are equivalence-tested against each
// other in tests/test_kernels.cpp.
//
// gemm computes C = beta*C + alpha*op(A)*op(B), row-major. A is stored
// (trans_a ? K x M : M x K) with row stride lda; B is stored
// (trans_b ? N x K : K x N) with row stride ldb; C is M x N with row
// stride ldc.
template <class T>
struct Table {
    void (*add)(const T* a, const T* b, T* out, std::size_t n);
    void (*sub)(const T* a, const T* b, T* out, std::size_t n);
    void (*mul)(const T* a, const T* b, T* out, std::size_t n);
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n);  // y += alpha*x
    void (*scale)(T alpha, T* x, std::size_t n);             // x *= alpha
    T (*dot)(const T* a, const T* b, std::size_t n);
    T (*sum)(const T* a, std::size_t n);
    T (*abs_sum)(const T* a, std::size_t n);
    T (*max_abs)(const T* a, std::size_t n);
    bool (*all_finite)(const T* a, std::size_t n);
    void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
                 T beta, T* c, std::size_t ldc);
    const char* name;
};

template <class T>
const Table<T>& scalar_table();

// nullptr when the CPU (or the build) lacks AVX2+FMA
template <class T>
const Table<T>* avx2_table();

// runtime-selected backend
template <class T>
const Table<T>& active();

const char* active_backend_name();

// Test hook: "scalar", "avx2" or "auto". Throws Error(config) if the
// requested backend is unavailable.
void force_backend(const std::string& name);

bool cpu_has_avx2();

}  // namespace fxl::kernels
