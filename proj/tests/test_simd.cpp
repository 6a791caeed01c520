#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "conelab/simd.hpp"
#include "test_support.hpp"

using namespace conelab;

namespace {

std::vector<const simd::KernelTable*> variants() {
    std::vector<const simd::KernelTable*> out{&simd::scalar_table()};
    if (auto* t = simd::avx2_table()) out.push_back(t);
    if (auto* t = simd::neon_table()) out.push_back(t);
    return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("vector kernels agree with the scalar reference bit for bit") {
    testgen::Gen gen(7);
    const auto& ref = simd::scalar_table();
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 1023u, 4097u}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = gen.uniform(-1e3, 1e3) * std::pow(10.0, gen.uniform(-8, 8));
            b[i] = gen.uniform(-1.0, 1.0);
        }
        for (const auto* table : variants()) {
            CAPTURE(table->name);
            CAPTURE(n);
            CHECK(same_bits(table->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
            std::vector<double> y1 = b, y2 = b;
            table->axpy(0.37, a.data(), y1.data(), n);
            ref.axpy(0.37, a.data(), y2.data(), n);
            CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
            if (n > 0) CHECK(same_bits(table->max_value(a.data(), n), ref.max_value(a.data(), n)));
        }
    }
}

TEST_CASE("dot uses four interleaved lanes") {
    // (1e16 + 1) + (-1e16 + 1) rounds to 0; a running sum would give 1.
    const double a[4] = {1e16, 1.0, -1e16, 1.0};
    const double ones[4] = {1.0, 1.0, 1.0, 1.0};
    CHECK(simd::scalar_table().dot(a, ones, 4) == 0.0);
    CHECK(simd::active().dot(a, ones, 4) == 0.0);
}

TEST_CASE("termwise ordered weights give ordered sums") {
    testgen::Gen gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen.index(300);
        std::vector<double> lo(n), hi(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = gen.uniform();
            hi[i] = lo[i] + (gen.coin() ? 0.0 : gen.uniform());
            v[i] = gen.uniform(0.0, 5.0);
        }
        CHECK(simd::dot(lo.data(), v.data(), n) <= simd::dot(hi.data(), v.data(), n));
    }
}
