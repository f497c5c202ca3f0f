#pragma once

#include <cstddef>

// Batch arithmetic kernels for the Monte Carlo and rate-evaluation inner
// loops. Scalar reference implementations are the semantic definition; the
// AVX2 variants are selected at runtime when the CPU supports them and are
// equivalence-tested against the scalar path.

namespace uavnoma::kernels {

struct Kernels {
    // out[i] = (px - ux[i])^2 + (py - uy[i])^2 + h2
    void (*dist2_to_point)(const double* ux, const double* uy, std::size_t n,
                           double px, double py, double h2, double* out);
    // out[i] = beta0 / d2[i]  (the alpha = 2 path-gain fast path)
    void (*recip_gain)(const double* d2, std::size_t n, double beta0, double* out);
    // out[i] = beta0 * d2[i]^(-alpha/2)
    void (*pow_gain)(const double* d2, std::size_t n, double beta0, double alpha, double* out);
    // out[i] = log2(1 + x[i]), x >= 0
    void (*log2_1p)(const double* x, std::size_t n, double* out);
    const char* name;
};

const Kernels& scalar();
bool avx2_available();
const Kernels& avx2(); // valid only if avx2_available()

/// Kernel set chosen at startup: AVX2 when the CPU supports it, unless
/// UAVNOMA_FORCE_SCALAR is set in the environment.
const Kernels& active();

} // namespace uavnoma::kernels
