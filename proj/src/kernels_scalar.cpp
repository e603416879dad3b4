#include "qjet/kernels.hpp"

namespace qjet::kernels {
namespace {

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void matmul_acc_scalar(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + av * brow[j];
        }
    }
}

void cmatmul_acc_scalar(const double* ar, const double* ai,
                        const double* br, const double* bi,
                        double* cr, double* ci,
                        std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crrow = cr + i * n;
        double* cirow = ci + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double arv = ar[i * k + kk];
            const double aiv = ai[i * k + kk];
            const double* brrow = br + kk * n;
            const double* birow = bi + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                crrow[j] = (crrow[j] + arv * brrow[j]) - aiv * birow[j];
                cirow[j] = (cirow[j] + arv * birow[j]) + aiv * brrow[j];
            }
        }
    }
}

} // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        "scalar",
        add_scalar, sub_scalar, mul_scalar,
        axpy_scalar,
        matmul_acc_scalar, cmatmul_acc_scalar,
    };
    return table;
}

} // namespace qjet::kernels
