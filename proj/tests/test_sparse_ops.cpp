#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "conelab/error.hpp"
#include "conelab/sparse_ops.hpp"
#include "test_support.hpp"

using namespace conelab;

namespace {

SparseFamily family_of(const Domain& d, int shift, const std::vector<DyadicCube>& cubes) {
    SparseFamily fam;
    fam.domain = d;
    fam.grid_shift = shift;
    for (const auto& q : cubes) fam.members.push_back({q, {}});
    return fam;
}

// Random family of grid cubes, possibly overlapping (no sparseness needed here).
SparseFamily random_family(testgen::Gen& gen, const DyadicGrid& grid, std::size_t count) {
    const auto all = grid.all_cubes();
    std::vector<DyadicCube> picked;
    for (std::size_t i = 0; i < count; ++i) picked.push_back(all[gen.index(all.size())]);
    return family_of(grid.domain(), grid.shift(), picked);
}

double naive_average(const GridFunction& f, const CellRange& q) {
    double s = 0.0;
    for (std::size_t k = 0; k < q.len; ++k) s += std::fabs(f[(q.lo + k) % f.size()]);
    return s / static_cast<double>(q.len);
}

// Dilation by direct interval arithmetic in real coordinates.
CellRange naive_dilate(const Domain& d, const DyadicCube& q, int j) {
    const double side = static_cast<double>(d.n >> q.level);
    const double centre = static_cast<double>(q.start) + side / 2;
    const double half = std::ldexp(side, j) / 2;
    double lo = std::floor(centre - half), hi = std::ceil(centre + half);
    if (d.periodic()) {
        if (hi - lo >= static_cast<double>(d.n)) return {0, d.n};
        const auto n = static_cast<long long>(d.n);
        const auto l = static_cast<long long>(lo);
        return {static_cast<std::size_t>(((l % n) + n) % n), static_cast<std::size_t>(hi - lo)};
    }
    lo = std::max(lo, 0.0);
    hi = std::min(hi, static_cast<double>(d.n));
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo)};
}

GridFunction bump_corpus_function(const Domain& d, int which) {
    switch (which) {
        case 0: return GridFunction::sample(d, [](double x) { return std::exp(-4 * x * x); });
        case 1: return GridFunction::sample(d, [](double x) { return std::fabs(x + 0.5) < 0.75 ? 1.0 : 0.0; });
        default: return GridFunction::sample(d, [](double x) { return std::exp(-x * x) * std::sin(6 * x); });
    }
}

}  // namespace

TEST_CASE("dilations match interval arithmetic") {
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -4.0, 4.0, 64);
        for (int shift = 0; shift < 3; ++shift) {
            const DyadicGrid grid(d, shift);
            for (const auto& q : grid.all_cubes()) {
                for (int j = 0; j <= 8; ++j) CHECK(dilate(d, q, j) == naive_dilate(d, q, j));
            }
        }
        const DyadicGrid grid(d, 0);
        const auto q = grid.level(3)[2];
        bool clipped = true;
        CHECK(dilate(d, q, 0, &clipped) == q.cells);
        CHECK_FALSE(clipped);
        dilate(d, q, 5, &clipped);
        CHECK(clipped);
    }
}

TEST_CASE("sparse square operator: single cube and nested chain") {
    const Domain d = Domain::line(0.0, 1.0, 64);
    const DyadicGrid grid(d, 0);
    testgen::Gen gen(5);
    const auto f = gen.function(d);
    const auto q = grid.level(2)[1];
    const auto single = sparse_square(f, family_of(d, 0, {q}));
    const double avg = naive_average(f, q.cells);
    for (std::size_t x = 0; x < d.n; ++x) CHECK(single[x] == doctest::Approx(q.cells.contains(x, d.n) ? avg : 0.0));

    const auto one = GridFunction::constant(d, 1.0);
    std::vector<DyadicCube> chain;
    for (int level = 0; level <= d.levels(); ++level) chain.push_back(grid.containing(37, level));
    const auto a = sparse_square(one, family_of(d, 0, chain));
    CHECK(a[37] == doctest::Approx(std::sqrt(static_cast<double>(chain.size()))).epsilon(1e-15));
}

TEST_CASE("sparse operators match double-loop oracles") {
    testgen::Gen gen(11);
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -2.0, 2.0, 64);
        for (int trial = 0; trial < 10; ++trial) {
            const DyadicGrid grid(d, static_cast<int>(gen.index(3)));
            const auto fam = random_family(gen, grid, 1 + gen.index(20));
            const auto f = gen.function(d), g = gen.function(d);
            const int j = static_cast<int>(gen.index(5));
            const auto a2 = sparse_square(f, fam);
            const auto ab = sparse_bilinear(f, g, fam);
            const auto tj = dilated_bilinear(f, g, fam, j);
            const auto t2 = dilated_square(f, fam, j);
            for (std::size_t x = 0; x < d.n; ++x) {
                double want_a2 = 0.0, want_ab = 0.0, want_tj = 0.0, want_t2 = 0.0;
                for (const auto& m : fam.members) {
                    if (!m.cube.cells.contains(x, d.n)) continue;
                    const double fa = naive_average(f, m.cube.cells);
                    const auto big = naive_dilate(d, m.cube, j);
                    want_a2 += fa * fa;
                    want_ab += fa * naive_average(g, naive_dilate(d, m.cube, 1));
                    want_tj += naive_average(f, big) * naive_average(g, big);
                    want_t2 += std::pow(naive_average(f, big), 2);
                }
                CHECK(a2[x] == doctest::Approx(std::sqrt(want_a2)).epsilon(1e-13));
                CHECK(ab[x] == doctest::Approx(want_ab).epsilon(1e-13));
                CHECK(tj[x] == doctest::Approx(want_tj).epsilon(1e-13));
                CHECK(t2[x] == doctest::Approx(std::sqrt(want_t2)).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("sparse square operator: exact monotonicity and subadditivity") {
    testgen::Gen gen(13);
    const Domain d = Domain::torus(0.0, 1.0, 128);
    for (int trial = 0; trial < 20; ++trial) {
        const DyadicGrid grid(d, static_cast<int>(gen.index(3)));
        const auto fam = random_family(gen, grid, 1 + gen.index(30));
        const auto g = gen.function(d);
        GridFunction f = g;
        for (double& v : f.values) v *= gen.uniform();  // |f| <= |g|
        const auto af = sparse_square(f, fam), ag = sparse_square(g, fam);
        std::size_t order = 0;
        for (std::size_t x = 0; x < d.n; ++x) order += af[x] > ag[x];
        CHECK(order == 0);

        SparseFamily first = fam, second = fam;
        const std::size_t cut = gen.index(fam.members.size() + 1);
        first.members.assign(fam.members.begin(), fam.members.begin() + static_cast<long>(cut));
        second.members.assign(fam.members.begin() + static_cast<long>(cut), fam.members.end());
        const auto a1 = sparse_square(g, first), a2 = sparse_square(g, second);
        std::size_t triangle = 0;
        for (std::size_t x = 0; x < d.n; ++x) triangle += ag[x] > a1[x] + a2[x];
        CHECK(triangle == 0);
    }
}

TEST_CASE("domination certificate") {
    const Domain d = Domain::line(-4.0, 4.0, 256);
    const KernelField field(d, OperatorSpec::laplacian(), Fluctuation::Plain, TimeGrid::make(2 * d.h(), 8.0));

    const auto empty = dominate(GridFunction::zeros(d), field, ConeConfig{1.0});
    CHECK(empty.families.size() == 3);
    for (const auto& fam : empty.families) CHECK(fam.members.empty());
    CHECK(empty.c_dom == 0.0);

    // The lemma's constant is uniform in f, so the aperture scaling is read off
    // the corpus-wide sup.
    const std::vector<double> alphas = {1.0, 2.0, 4.0};
    std::vector<double> corpus_c(alphas.size(), 0.0);
    for (int which = 0; which < 3; ++which) {
        const auto f = bump_corpus_function(d, which);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const auto cert = dominate(f, field, ConeConfig{alphas[a]});
            for (const auto& fam : cert.families) {
                std::string why;
                CHECK_MESSAGE(fam.verify(&why), why);
            }
            CHECK(std::isfinite(cert.c_dom));
            CHECK(cert.c_dom > 0.0);
            CHECK(std::isfinite(cert.taa_constant));
            CHECK(cert.max_dilation > 0);
            for (std::size_t x = 0; x < d.n; ++x) CHECK(cert.numerator[x] <= cert.c_dom * cert.denominator[x] * (1 + 1e-15));
            MESSAGE("f" << which << " alpha=" << alphas[a] << " C_dom=" << cert.c_dom << " TAA=" << cert.taa_constant
                        << " candidates=" << cert.candidate_cubes);
            corpus_c[a] = std::max(corpus_c[a], cert.c_dom);

            const auto j = cert.to_json();
            CHECK(j.at("families").size() == 3);
            CHECK(j.at("c_dom").get<double>() == cert.c_dom);
            CHECK(j.at("ratio").size() == d.n);
        }
    }
    for (std::size_t a = 1; a < alphas.size(); ++a) CHECK(corpus_c[a] <= 4.0 * corpus_c[a - 1]);
}
