#pragma once
// Vector kernels behind a runtime-selected table.
//
// Every variant accumulates in four lanes (element i goes to lane i mod 4) and
// reduces as (l0 + l1) + (l2 + l3) without fused multiply-add, so the scalar
// and vector paths agree bit for bit. Cone sums rely on this: two weight
// profiles that are ordered termwise give sums that are ordered exactly.

#include <cstddef>
#include <string_view>

namespace conelab::simd {

struct KernelTable {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*max_value)(const double* a, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double max_value(const double* a, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double max_value(const double* a, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double max_value(const double* a, std::size_t n);
}  // namespace neon
#endif

const KernelTable& scalar_table();
// Null when the variant is not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Chosen once: CONELAB_SIMD=scalar forces the reference path.
const KernelTable& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline double max_value(const double* a, std::size_t n) { return active().max_value(a, n); }

}  // namespace conelab::simd
