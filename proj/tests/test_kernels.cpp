#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fxlearn/errors.hpp"
#include "fxlearn/kernels.hpp"
#include "fxlearn/rng.hpp"

using namespace fxl;

namespace {

template <class T>
std::vector<T> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return v;
}

// scalar and AVX2 use different accumulation orders, so equivalence is
// tolerance-based, scaled by the magnitude of the data
template <class T>
void check_close(const std::vector<T>& a, const std::vector<T>& b, double tol_scale) {
    REQUIRE(a.size() == b.size());
    const double eps = std::is_same_v<T, float> ? 1e-6 : 1e-14;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::abs(static_cast<double>(a[i]))});
        CHECK(std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) <= tol_scale * eps * scale);
    }
}

}  // namespace

TEST_CASE("gemm reference handles all transpose combinations") {
    const auto& k = kernels::scalar_table<double>();
    // A = [[1,2,3],[4,5,6]] (2x3), B = [[1,0],[0,1],[1,1]] (3x2)
    const std::vector<double> a = {1, 2, 3, 4, 5, 6};
    const std::vector<double> b = {1, 0, 0, 1, 1, 1};
    std::vector<double> c(4, 0.0);
    k.gemm(false, false, 2, 2, 3, 1.0, a.data(), 3, b.data(), 2, 0.0, c.data(), 2);
    CHECK(c == std::vector<double>{4, 5, 10, 11});

    // A^T path: store A as 3x2 = [[1,4],[2,5],[3,6]]
    const std::vector<double> at = {1, 4, 2, 5, 3, 6};
    std::fill(c.begin(), c.end(), 0.0);
    k.gemm(true, false, 2, 2, 3, 1.0, at.data(), 2, b.data(), 2, 0.0, c.data(), 2);
    CHECK(c == std::vector<double>{4, 5, 10, 11});

    // B^T path: store B as 2x3 = [[1,0,1],[0,1,1]]
    const std::vector<double> bt = {1, 0, 1, 0, 1, 1};
    std::fill(c.begin(), c.end(), 0.0);
    k.gemm(false, true, 2, 2, 3, 1.0, a.data(), 3, bt.data(), 3, 0.0, c.data(), 2);
    CHECK(c == std::vector<double>{4, 5, 10, 11});

    // alpha/beta accumulate
    k.gemm(false, false, 2, 2, 3, 2.0, a.data(), 3, b.data(), 2, 1.0, c.data(), 2);
    CHECK(c == std::vector<double>{12, 15, 30, 33});
}

TEST_CASE_TEMPLATE("scalar and avx2 backends agree", T, float, double) {
    const auto* avx = kernels::avx2_table<T>();
    if (avx == nullptr) {
        MESSAGE("avx2 unavailable on this CPU, skipping equivalence");
        return;
    }
    const auto& ref = kernels::scalar_table<T>();
    Rng rng(0xa11 + sizeof(T));

    for (const std::size_t n : {1UL, 7UL, 8UL, 9UL, 64UL, 1000UL, 4097UL}) {
        auto a = random_vec<T>(rng, n);
        auto b = random_vec<T>(rng, n);
        std::vector<T> r1(n), r2(n);

        ref.add(a.data(), b.data(), r1.data(), n);
        avx->add(a.data(), b.data(), r2.data(), n);
        check_close(r1, r2, 1.0);

        ref.sub(a.data(), b.data(), r1.data(), n);
        avx->sub(a.data(), b.data(), r2.data(), n);
        check_close(r1, r2, 1.0);

        ref.mul(a.data(), b.data(), r1.data(), n);
        avx->mul(a.data(), b.data(), r2.data(), n);
        check_close(r1, r2, 1.0);

        r1 = b;
        r2 = b;
        ref.axpy(T(0.77), a.data(), r1.data(), n);
        avx->axpy(T(0.77), a.data(), r2.data(), n);
        check_close(r1, r2, 4.0);

        r1 = a;
        r2 = a;
        ref.scale(T(-1.3), r1.data(), n);
        avx->scale(T(-1.3), r2.data(), n);
        check_close(r1, r2, 1.0);

        const double scale = static_cast<double>(n);
        CHECK(std::abs(static_cast<double>(ref.dot(a.data(), b.data(), n)) -
                       static_cast<double>(avx->dot(a.data(), b.data(), n))) <=
              (std::is_same_v<T, float> ? 1e-6 : 1e-14) * scale);
        CHECK(std::abs(static_cast<double>(ref.sum(a.data(), n)) -
                       static_cast<double>(avx->sum(a.data(), n))) <=
              (std::is_same_v<T, float> ? 1e-6 : 1e-14) * scale);
        CHECK(std::abs(static_cast<double>(ref.abs_sum(a.data(), n)) -
                       static_cast<double>(avx->abs_sum(a.data(), n))) <=
              (std::is_same_v<T, float> ? 1e-6 : 1e-14) * scale);
        CHECK(static_cast<double>(ref.max_abs(a.data(), n)) ==
              doctest::Approx(static_cast<double>(avx->max_abs(a.data(), n))).epsilon(1e-7));
    }
}

TEST_CASE_TEMPLATE("gemm backends agree", T, float, double) {
    const auto* avx = kernels::avx2_table<T>();
    if (avx == nullptr) return;
    const auto& ref = kernels::scalar_table<T>();
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 1 + rng.below(24);
        const std::size_t n = 1 + rng.below(40);
        const std::size_t kk = 1 + rng.below(33);
        const bool ta = rng.coin();
        const bool tb = rng.coin();
        auto a = random_vec<T>(rng, m * kk);
        auto b = random_vec<T>(rng, kk * n);
        auto c0 = random_vec<T>(rng, m * n);
        auto c1 = c0;
        auto c2 = c0;
        const T alpha = static_cast<T>(rng.uniform(-1.5, 1.5));
        const T beta = static_cast<T>(trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 1.0 : 0.5));
        const std::size_t lda = ta ? m : kk;
        const std::size_t ldb = tb ? kk : n;
        ref.gemm(ta, tb, m, n, kk, alpha, a.data(), lda, b.data(), ldb, beta, c1.data(), n);
        avx->gemm(ta, tb, m, n, kk, alpha, a.data(), lda, b.data(), ldb, beta, c2.data(), n);
        const double tol = (std::is_same_v<T, float> ? 1e-6 : 1e-14) * static_cast<double>(kk) * 4.0;
        for (std::size_t i = 0; i < c1.size(); ++i) {
            CHECK(std::abs(static_cast<double>(c1[i]) - static_cast<double>(c2[i])) <= tol);
        }
    }
}

TEST_CASE("all_finite flags NaN and Inf in both backends") {
    Rng rng(3);
    for (const std::size_t n : {5UL, 16UL, 333UL}) {
        auto v = random_vec<float>(rng, n);
        const auto& ref = kernels::scalar_table<float>();
        CHECK(ref.all_finite(v.data(), n));
        const std::size_t at = rng.below(n);
        auto bad = v;
        bad[at] = std::numeric_limits<float>::quiet_NaN();
        CHECK_FALSE(ref.all_finite(bad.data(), n));
        bad[at] = std::numeric_limits<float>::infinity();
        CHECK_FALSE(ref.all_finite(bad.data(), n));
        if (const auto* avx = kernels::avx2_table<float>()) {
            CHECK(avx->all_finite(v.data(), n));
            bad[at] = std::numeric_limits<float>::quiet_NaN();
            CHECK_FALSE(avx->all_finite(bad.data(), n));
            bad[at] = -std::numeric_limits<float>::infinity();
            CHECK_FALSE(avx->all_finite(bad.data(), n));
        }
    }
}

TEST_CASE("backend forcing") {
    CHECK_THROWS_AS(kernels::force_backend("bogus"), Error);
    kernels::force_backend("scalar");
    CHECK(std::string(kernels::active_backend_name()) == "scalar");
    kernels::force_backend("auto");
    if (kernels::cpu_has_avx2()) {
        CHECK(std::string(kernels::active_backend_name()) == "avx2");
    }
}
