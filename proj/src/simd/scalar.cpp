#include "conelab/simd.hpp"

#include <limits>

namespace conelab::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (int l = 0; l < 4; ++l) {
            const double prod = a[i + l] * b[i + l];
            lane[l] = lane[l] + prod;
        }
    }
    if (i < n) {
        for (int l = 0; l < 4; ++l) {
            const double prod = (i + l < n) ? a[i + l] * b[i + l] : 0.0;
            lane[l] = lane[l] + prod;
        }
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double prod = alpha * x[i];
        y[i] = y[i] + prod;
    }
}

double max_value(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] > m) m = a[i];
    }
    return m;
}

}  // namespace conelab::simd::scalar
