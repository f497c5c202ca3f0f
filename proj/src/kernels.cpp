#include "uavnoma/kernels.hpp"

#include <cstdlib>

namespace uavnoma::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& active() {
    static const Kernels& chosen = []() -> const Kernels& {
        if (std::getenv("UAVNOMA_FORCE_SCALAR") != nullptr) return scalar();
        if (avx2_available()) return avx2();
        return scalar();
    }();
    return chosen;
}

} // namespace uavnoma::kernels
