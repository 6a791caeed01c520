#include "conelab/simd.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace conelab::simd::avx2 {

namespace {

__attribute__((target("avx2"))) inline __m256d load_tail(const double* p, std::size_t count) {
    alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t l = 0; l < count; ++l) buf[l] = p[l];
    return _mm256_load_pd(buf);
}

}  // namespace

__attribute__((target("avx2"))) double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, prod);
    }
    if (i < n) {
        const __m256d prod = _mm256_mul_pd(load_tail(a + i, n - i), load_tail(b + i, n - i));
        acc = _mm256_add_pd(acc, prod);
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

__attribute__((target("avx2"))) void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

__attribute__((target("avx2"))) double max_value(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_set1_pd(m);
        for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
        alignas(32) double lane[4];
        _mm256_store_pd(lane, acc);
        m = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
    }
    for (; i < n; ++i) {
        if (a[i] > m) m = a[i];
    }
    return m;
}

}  // namespace conelab::simd::avx2

#endif
