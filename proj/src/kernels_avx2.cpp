// Compiled with -mavx2 -mno-fma -ffp-contract=off so mul/add stay separate
// instructions and match the scalar reference bit for bit.
#include "qjet/kernels.hpp"

#if defined(QJET_HAVE_AVX2)

#include <immintrin.h>

namespace qjet::kernels {
namespace {

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void matmul_acc_avx2(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            const __m256d avv = _mm256_set1_pd(av);
            const double* brow = b + kk * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv, _mm256_loadu_pd(brow + j)));
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] = crow[j] + av * brow[j];
        }
    }
}

void cmatmul_acc_avx2(const double* ar, const double* ai,
                      const double* br, const double* bi,
                      double* cr, double* ci,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crrow = cr + i * n;
        double* cirow = ci + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double arv = ar[i * k + kk];
            const double aiv = ai[i * k + kk];
            const __m256d arvv = _mm256_set1_pd(arv);
            const __m256d aivv = _mm256_set1_pd(aiv);
            const double* brrow = br + kk * n;
            const double* birow = bi + kk * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d brv = _mm256_loadu_pd(brrow + j);
                const __m256d biv = _mm256_loadu_pd(birow + j);
                __m256d crv = _mm256_loadu_pd(crrow + j);
                __m256d civ = _mm256_loadu_pd(cirow + j);
                crv = _mm256_sub_pd(_mm256_add_pd(crv, _mm256_mul_pd(arvv, brv)),
                                    _mm256_mul_pd(aivv, biv));
                civ = _mm256_add_pd(_mm256_add_pd(civ, _mm256_mul_pd(arvv, biv)),
                                    _mm256_mul_pd(aivv, brv));
                _mm256_storeu_pd(crrow + j, crv);
                _mm256_storeu_pd(cirow + j, civ);
            }
            for (; j < n; ++j) {
                crrow[j] = (crrow[j] + arv * brrow[j]) - aiv * birow[j];
                cirow[j] = (cirow[j] + arv * birow[j]) + aiv * brrow[j];
            }
        }
    }
}

} // namespace

const KernelTable* avx2_table() {
    if (!cpu_has_avx2()) return nullptr;
    static const KernelTable table = {
        "avx2",
        add_avx2, sub_avx2, mul_avx2,
        axpy_avx2,
        matmul_acc_avx2, cmatmul_acc_avx2,
    };
    return &table;
}

} // namespace qjet::kernels

#else // !QJET_HAVE_AVX2

namespace qjet::kernels {

const KernelTable* avx2_table() { return nullptr; }

} // namespace qjet::kernels

#endif
