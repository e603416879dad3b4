#include "qjet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace qjet::kernels {

bool cpu_has_avx2() {
#if defined(QJET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& active() {
    static const KernelTable* chosen = [] {
        const char* force = std::getenv("QJET_KERNELS");
        if (force && std::strcmp(force, "scalar") == 0) return &scalar_table();
        if (force && std::strcmp(force, "avx2") == 0) {
            const KernelTable* t = avx2_table();
            return t ? t : &scalar_table();
        }
        const KernelTable* t = avx2_table();
        return t ? t : &scalar_table();
    }();
    return *chosen;
}

} // namespace qjet::kernels
