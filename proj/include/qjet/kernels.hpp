#pragma once

#include <cstddef>

// Data-parallel inner loops used by the tensor layer. Every kernel exists as
// a scalar reference and, on x86-64, an AVX2 variant selected at runtime.
// The two variants execute the same arithmetic expression tree per element
// (no FMA contraction, no reassociation), so their results are bit-identical;
// the equivalence tests assert exact equality.
namespace qjet::kernels {

struct KernelTable {
    const char* name;

    // out[i] = a[i] op b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // C(m x n) += A(m x k) * B(k x n), row-major, i-k-j loop order.
    void (*matmul_acc)(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t k, std::size_t n);

    // Split-complex C += A * B over (re, im) planes, same loop order as
    // matmul_acc with the fixed per-element tree
    //   cr = (cr + ar*br) - ai*bi ;  ci = (ci + ar*bi) + ai*br.
    void (*cmatmul_acc)(const double* ar, const double* ai,
                        const double* br, const double* bi,
                        double* cr, double* ci,
                        std::size_t m, std::size_t k, std::size_t n);
};

// Table chosen at first use: AVX2 when the CPU supports it, else scalar.
// Environment override QJET_KERNELS=scalar|avx2 forces a variant (an
// unsupported forced variant falls back to scalar).
const KernelTable& active();

const KernelTable& scalar_table();

// nullptr when this build/CPU cannot run AVX2.
const KernelTable* avx2_table();

bool cpu_has_avx2();

} // namespace qjet::kernels
