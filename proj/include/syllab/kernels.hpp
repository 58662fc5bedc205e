#pragma once
// Dense double-precision inner loops used by every layer.
//
// Matrices are row-major. Each kernel exists as a portable scalar reference
// and, on x86-64, as an AVX2+FMA variant. The variant is picked once at
// startup from CPUID; setting SYLLAB_KERNELS=scalar in the environment forces
// the reference path.

#include <cstddef>
#include <string_view>

namespace syllab::kernels {

struct KernelTable {
    std::string_view name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y[r] += sum_c A[r, c] * x[c]            A: rows x cols
    void (*gemv)(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
    // y[c] += sum_r A[r, c] * x[r]            A: rows x cols
    void (*gemv_t)(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
    // A[r, c] += x[r] * y[c]                  A: rows x cols
    void (*ger)(double* A, const double* x, const double* y, std::size_t rows, std::size_t cols);
};

const KernelTable& scalar();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2();

// The table every layer uses; resolved on first call.
const KernelTable& active();

}  // namespace syllab::kernels
