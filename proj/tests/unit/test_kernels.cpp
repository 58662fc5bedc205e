#include <doctest.h>

#include <cmath>
#include <vector>

#include "syllab/kernels.hpp"
#include "syllab/tensor.hpp"

using namespace syllab;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

// Different summation orders agree to a few ulps of the magnitude summed.
void check_close(const std::vector<double>& a, const std::vector<double>& b, double magnitude) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-13 * (1.0 + magnitude));
}

}  // namespace

TEST_CASE("scalar kernels against naive loops") {
    const auto& k = kernels::scalar();
    Rng rng(1);
    const std::size_t rows = 5, cols = 7;
    const auto A = random_vector(rows * cols, rng);
    const auto x = random_vector(cols, rng);
    const auto r = random_vector(rows, rng);

    std::vector<double> y(rows, 1.0), expect(rows, 1.0);
    k.gemv(A.data(), x.data(), y.data(), rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) expect[i] += A[i * cols + j] * x[j];
    }
    check_close(y, expect, 10.0);

    std::vector<double> z(cols, -1.0), expect_t(cols, -1.0);
    k.gemv_t(A.data(), r.data(), z.data(), rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) expect_t[j] += A[i * cols + j] * r[i];
    }
    check_close(z, expect_t, 10.0);

    auto G = A;
    auto expect_g = A;
    k.ger(G.data(), r.data(), x.data(), rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) expect_g[i * cols + j] += r[i] * x[j];
    }
    CHECK(G == expect_g);
}

TEST_CASE("active kernel table is a known variant") {
    const auto& active = kernels::active();
    const bool known = &active == &kernels::scalar() || &active == kernels::avx2();
    CHECK(known);
}

TEST_CASE("avx2 kernels match the scalar reference") {
    const kernels::KernelTable* simd = kernels::avx2();
    if (simd == nullptr) {
        MESSAGE("AVX2 unavailable on this machine; equivalence not exercised");
        return;
    }
    const auto& ref = kernels::scalar();
    Rng rng(2);
    // Sizes straddle the 4- and 8-wide blocking and its remainders.
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t rows = rng.below(13);
        const std::size_t cols = rng.below(70);
        CAPTURE(rows);
        CAPTURE(cols);
        const auto A = random_vector(rows * cols, rng);
        const auto x = random_vector(cols, rng);
        const auto r = random_vector(rows, rng);
        const double mag = static_cast<double>(cols + rows) * 4.0;

        const double d_ref = ref.dot(x.data(), x.data(), cols);
        const double d_simd = simd->dot(x.data(), x.data(), cols);
        CHECK(std::abs(d_ref - d_simd) <= 1e-13 * (1.0 + d_ref));

        auto y_ref = random_vector(cols, rng);
        auto y_simd = y_ref;
        ref.axpy(0.37, x.data(), y_ref.data(), cols);
        simd->axpy(0.37, x.data(), y_simd.data(), cols);
        check_close(y_simd, y_ref, 4.0);

        std::vector<double> g_ref(rows, 0.5), g_simd(rows, 0.5);
        ref.gemv(A.data(), x.data(), g_ref.data(), rows, cols);
        simd->gemv(A.data(), x.data(), g_simd.data(), rows, cols);
        check_close(g_simd, g_ref, mag);

        std::vector<double> t_ref(cols, 0.25), t_simd(cols, 0.25);
        ref.gemv_t(A.data(), r.data(), t_ref.data(), rows, cols);
        simd->gemv_t(A.data(), r.data(), t_simd.data(), rows, cols);
        check_close(t_simd, t_ref, mag);

        auto o_ref = A;
        auto o_simd = A;
        ref.ger(o_ref.data(), r.data(), x.data(), rows, cols);
        simd->ger(o_simd.data(), r.data(), x.data(), rows, cols);
        check_close(o_simd, o_ref, 16.0);
    }
}
