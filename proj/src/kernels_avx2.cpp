#include "uavnoma/kernels.hpp"

#ifdef __AVX2__

#include <immintrin.h>
#include <cmath>

namespace uavnoma::kernels {

namespace {

// log(f) = 2*atanh((f-1)/(f+1)) series, valid after range reduction to
// f in [sqrt(2)/2, sqrt(2)] where |s| <= 0.1716.
inline __m256d atanh_poly(__m256d s) {
    const __m256d s2 = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(2.0 / 13.0);
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0 / 11.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0 / 9.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0 / 7.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0 / 5.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0 / 3.0));
    p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(2.0));
    return _mm256_mul_pd(p, s); // 2*atanh(s)
}

// Natural log of positive finite normal doubles.
inline __m256d vlog(__m256d y) {
    const __m256i bits = _mm256_castpd_si256(y);
    const __m256i exp_raw = _mm256_srli_epi64(bits, 52);
    __m256i e_i = _mm256_sub_epi64(exp_raw, _mm256_set1_epi64x(1023));
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
    __m256d f = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

    // Center f around 1: if f > sqrt(2), halve it and bump the exponent.
    const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730950488);
    const __m256d gt = _mm256_cmp_pd(f, sqrt2, _CMP_GT_OQ);
    f = _mm256_blendv_pd(f, _mm256_mul_pd(f, _mm256_set1_pd(0.5)), gt);
    e_i = _mm256_sub_epi64(e_i, _mm256_castpd_si256(_mm256_and_pd(
              gt, _mm256_castsi256_pd(_mm256_set1_epi64x(-1)))));

    // int64 -> double (values are small, via int32 gather of low words)
    alignas(32) long long ei[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(ei), e_i);
    const __m256d e = _mm256_set_pd(static_cast<double>(ei[3]), static_cast<double>(ei[2]),
                                    static_cast<double>(ei[1]), static_cast<double>(ei[0]));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(f, one), _mm256_add_pd(f, one));
    const __m256d ln2 = _mm256_set1_pd(0.69314718055994530942);
    return _mm256_fmadd_pd(e, ln2, atanh_poly(s));
}

// exp(r) for |r| <= 0.5*ln2, Taylor to degree 11.
inline __m256d exp_small(__m256d r) {
    __m256d p = _mm256_set1_pd(1.0 / 39916800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    return p;
}

// exp(t) for t in roughly [-700, 700].
inline __m256d vexp(__m256d t) {
    const __m256d inv_ln2 = _mm256_set1_pd(1.4426950408889634074);
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(t, inv_ln2),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    // r = t - k*ln2 in two pieces for accuracy
    const __m256d ln2_hi = _mm256_set1_pd(0.693147180369123816490);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, t);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);
    const __m256d er = exp_small(r);
    // scale by 2^k via exponent injection
    alignas(32) double kd[4];
    _mm256_store_pd(kd, k);
    alignas(32) long long kb[4];
    for (int i = 0; i < 4; ++i)
        kb[i] = (static_cast<long long>(kd[i]) + 1023LL) << 52;
    const __m256d scale = _mm256_castsi256_pd(_mm256_load_si256(reinterpret_cast<const __m256i*>(kb)));
    return _mm256_mul_pd(er, scale);
}

void dist2_to_point_avx2(const double* ux, const double* uy, std::size_t n,
                         double px, double py, double h2, double* out) {
    const __m256d vpx = _mm256_set1_pd(px);
    const __m256d vpy = _mm256_set1_pd(py);
    const __m256d vh2 = _mm256_set1_pd(h2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(vpx, _mm256_loadu_pd(ux + i));
        const __m256d dy = _mm256_sub_pd(vpy, _mm256_loadu_pd(uy + i));
        __m256d acc = _mm256_fmadd_pd(dx, dx, vh2);
        acc = _mm256_fmadd_pd(dy, dy, acc);
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i < n; ++i) {
        const double dx = px - ux[i];
        const double dy = py - uy[i];
        out[i] = dx * dx + dy * dy + h2;
    }
}

void recip_gain_avx2(const double* d2, std::size_t n, double beta0, double* out) {
    const __m256d vb = _mm256_set1_pd(beta0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_div_pd(vb, _mm256_loadu_pd(d2 + i)));
    for (; i < n; ++i) out[i] = beta0 / d2[i];
}

void pow_gain_avx2(const double* d2, std::size_t n, double beta0, double alpha, double* out) {
    const __m256d vb = _mm256_set1_pd(beta0);
    const __m256d ve = _mm256_set1_pd(-0.5 * alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d lg = vlog(_mm256_loadu_pd(d2 + i));
        const __m256d g = vexp(_mm256_mul_pd(ve, lg));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vb, g));
    }
    for (; i < n; ++i) out[i] = beta0 * std::pow(d2[i], -0.5 * alpha);
}

void log2_1p_avx2(const double* x, std::size_t n, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d inv_ln2 = _mm256_set1_pd(1.4426950408889634074);
    const __m256d tiny = _mm256_set1_pd(1e-4);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d big = _mm256_mul_pd(vlog(_mm256_add_pd(one, v)), inv_ln2);
        // series path keeps relative accuracy when 1+x would round x away
        __m256d s = _mm256_set1_pd(-0.25);
        s = _mm256_fmadd_pd(s, v, _mm256_set1_pd(1.0 / 3.0));
        s = _mm256_fmadd_pd(s, v, _mm256_set1_pd(-0.5));
        s = _mm256_fmadd_pd(s, v, one);
        const __m256d small = _mm256_mul_pd(_mm256_mul_pd(v, s), inv_ln2);
        const __m256d use_small = _mm256_cmp_pd(v, tiny, _CMP_LT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(big, small, use_small));
    }
    constexpr double c = 1.4426950408889634073599246810019;
    for (; i < n; ++i) out[i] = std::log1p(x[i]) * c;
}

} // namespace

const Kernels& avx2() {
    static const Kernels k{dist2_to_point_avx2, recip_gain_avx2,
                           pow_gain_avx2, log2_1p_avx2, "avx2"};
    return k;
}

} // namespace uavnoma::kernels

#else

namespace uavnoma::kernels {
const Kernels& avx2() { return scalar(); }
} // namespace uavnoma::kernels

#endif
