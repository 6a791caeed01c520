#include "conelab/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <limits>

namespace conelab::simd::neon {

// Two 2-wide registers hold the four lanes so the accumulation order matches
// the scalar reference.
double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double lane[4];
    vst1q_f64(lane, lo);
    vst1q_f64(lane + 2, hi);
    if (i < n) {
        for (int l = 0; l < 4; ++l) {
            const double prod = (i + l < n) ? a[i + l] * b[i + l] : 0.0;
            lane[l] = lane[l] + prod;
        }
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

double max_value(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 2) {
        float64x2_t acc = vdupq_n_f64(m);
        for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(a + i));
        m = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
    }
    for (; i < n; ++i) {
        if (a[i] > m) m = a[i];
    }
    return m;
}

}  // namespace conelab::simd::neon

#endif
