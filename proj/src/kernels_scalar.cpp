#include "uavnoma/kernels.hpp"

#include <cmath>

namespace uavnoma::kernels {

namespace {

void dist2_to_point_scalar(const double* ux, const double* uy, std::size_t n,
                           double px, double py, double h2, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = px - ux[i];
        const double dy = py - uy[i];
        out[i] = dx * dx + dy * dy + h2;
    }
}

void recip_gain_scalar(const double* d2, std::size_t n, double beta0, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = beta0 / d2[i];
}

void pow_gain_scalar(const double* d2, std::size_t n, double beta0, double alpha, double* out) {
    const double e = -0.5 * alpha;
    for (std::size_t i = 0; i < n; ++i) out[i] = beta0 * std::pow(d2[i], e);
}

void log2_1p_scalar(const double* x, std::size_t n, double* out) {
    constexpr double inv_ln2 = 1.4426950408889634073599246810019;
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log1p(x[i]) * inv_ln2;
}

} // namespace

const Kernels& scalar() {
    static const Kernels k{dist2_to_point_scalar, recip_gain_scalar,
                           pow_gain_scalar, log2_1p_scalar, "scalar"};
    return k;
}

} // namespace uavnoma::kernels
