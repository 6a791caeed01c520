#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conelab/error.hpp"
#include "conelab/orlicz.hpp"
#include "test_support.hpp"

using namespace conelab;

namespace {

std::vector<YoungFunction> bumps() {
    return {YoungFunction::power(2.0),        YoungFunction::power(3.0, 0.5), YoungFunction::log_bump(2.0, 1.0),
            YoungFunction::log_bump(1.5, 0.5), YoungFunction::loglog_bump(2.0, 1.0), YoungFunction::loglog_bump(3.0, 1.0)};
}

}  // namespace

TEST_CASE("gauge values") {
    CHECK(YoungFunction::llogl()(2.0) == doctest::Approx(2.0 * std::log(std::exp(1.0) + 2.0)).epsilon(1e-14));
    CHECK(YoungFunction::expl()(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
    CHECK(YoungFunction::commutator()(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(YoungFunction::commutator()(std::exp(2.0)) == doctest::Approx(3.0 * std::exp(2.0)).epsilon(1e-14));
    const auto lb = YoungFunction::log_bump(2.0, 1.0);
    CHECK(lb(3.0) == doctest::Approx(9.0 * std::pow(std::log(std::exp(1.0) + 3.0), 2.0)).epsilon(1e-14));
    // Huge arguments stay finite in log form.
    CHECK(std::isfinite(lb.log_value(1e8)));
    CHECK(lb.inverse(lb(7.0)) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK_THROWS_AS(YoungFunction::from_name("cubic"), PreconditionError);
}

TEST_CASE("power complementary closed forms") {
    const auto half_square = YoungFunction::power(2.0, 0.5);
    const auto dual = half_square.complementary();
    CHECK(dual.kind() == GaugeKind::Power);
    CHECK(dual.p() == 2.0);
    CHECK(dual.coefficient() == doctest::Approx(0.5).epsilon(1e-15));
    for (double p : {1.5, 3.0, 4.0}) {
        const double q = p / (p - 1.0);
        const auto c = YoungFunction::power(p, 1.0 / p).complementary();
        CHECK(c.p() == doctest::Approx(q).epsilon(1e-15));
        CHECK(c.coefficient() == doctest::Approx(1.0 / q).epsilon(1e-14));
    }
    CHECK_THROWS_AS(YoungFunction::power(1.0).complementary(), PreconditionError);
}

TEST_CASE("numerical complementary agrees with the closed form on a non-power gauge") {
    // conj(e^t - 1)(t) = t log t - t + 1 for t >= 1, 0 below.
    const auto c = YoungFunction::expl().complementary();
    for (double t : {0.5, 1.5, 3.0, 20.0, 1e4, 1e8}) {
        const double exact = t <= 1.0 ? 0.0 : t * std::log(t) - t + 1.0;
        CHECK(c(t) == doctest::Approx(exact).epsilon(1e-7));
    }
}

TEST_CASE("gauge sandwich, Young inequalities and involution") {
    for (const auto& phi : bumps()) {
        CAPTURE(phi.name());
        const auto r = gauge_report(phi);
        CHECK(r.young_max_excess <= 1e-6);
        CHECK(r.sandwich_min >= 1.0 - 1e-6);
        CHECK(r.sandwich_max <= 2.0 + 2e-6);
        CHECK(r.young2_max <= 1.0 + 1e-6);
        CHECK(r.involution_error <= 1e-6);
        CHECK(r.convex_increasing);
    }
}

TEST_CASE("Luxemburg norm examples") {
    const Domain d = Domain::line(0.0, 1.0, 64);
    const CellRange all{0, 64};
    for (double p : {1.0, 2.0, 3.5}) {
        CHECK(luxemburg_norm(GridFunction::constant(d, 1.75), all, YoungFunction::power(p)) ==
              doctest::Approx(1.75).epsilon(1e-14));
    }
    testgen::Gen gen(8);
    const auto f = gen.function(d);
    CHECK(luxemburg_norm(f, all, YoungFunction::power(1.0)) == doctest::Approx(average_abs(f, Cube{0.5, 1.0})).epsilon(1e-14));
    const auto ind = GridFunction::sample(d, [](double x) { return x < 0.5 ? 1.0 : 0.0; });
    CHECK(luxemburg_norm(ind, all, YoungFunction::power(2.0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(luxemburg_norm(GridFunction::zeros(d), all, YoungFunction::log_bump(2, 1)) == 0.0);
}

TEST_CASE("Luxemburg solver residual, homogeneity and monotonicity") {
    testgen::Gen gen(12);
    const Domain d = Domain::line(0.0, 1.0, 128);
    std::vector<YoungFunction> gauges = bumps();
    gauges.push_back(YoungFunction::llogl());
    gauges.push_back(YoungFunction::expl());
    gauges.push_back(YoungFunction::commutator());
    gauges.push_back(YoungFunction::log_bump(2.0, 1.0).complementary());
    for (const auto& phi : gauges) {
        CAPTURE(phi.name());
        for (int trial = 0; trial < 10; ++trial) {
            const auto f = gen.function(d);
            const auto res = luxemburg_solve(f.values, phi);
            CHECK(res.residual <= 1e-9);
            const double c = gen.uniform(0.1, 10.0);
            const auto scaled = luxemburg_solve(f.scaled(-c).values, phi);
            CHECK(scaled.norm == doctest::Approx(c * res.norm).epsilon(1e-9));
            auto bigger = f.abs();
            for (double& v : bigger.values) v += gen.uniform(0.0, 0.2);
            CHECK(luxemburg_solve(bigger.values, phi).norm >= res.norm * (1 - 1e-12));
        }
    }
}

TEST_CASE("B_p integral") {
    for (auto [r, p] : {std::pair{1.0, 2.0}, std::pair{2.0, 3.0}, std::pair{1.5, 4.0}}) {
        const auto res = bp_constant(YoungFunction::power(r), p);
        CHECK(res.finite);
        CHECK(res.value == doctest::Approx(1.0 / (p - r)).epsilon(1e-6));
    }
    CHECK_FALSE(bp_constant(YoungFunction::power(2.0), 2.0).finite);
    CHECK_FALSE(bp_constant(YoungFunction::log_bump(2.0, 1.0), 2.0).finite);
    CHECK_THROWS_AS(bp_constant(YoungFunction::power(2.0), 1.0), PreconditionError);
    // Dual form for powers: int_1^inf (t^p' / (c t^p'))^(p-1) dt/t diverges; t^r with r < p converges.
    CHECK(bp_dual_integral(YoungFunction::power(1.5), 2.0).finite);
    CHECK_FALSE(bp_dual_integral(YoungFunction::power(2.0), 2.0).finite);
}

TEST_CASE("conjugate bumps satisfy B_p") {
    for (double p : {1.5, 2.0, 3.0}) {
        const double q = p / (p - 1.0);
        CAPTURE(p);
        CHECK(bp_constant(YoungFunction::log_bump(p, 1.0).complementary(), q).finite);
        CHECK(bp_constant(YoungFunction::log_bump(q, 1.0).complementary(), p).finite);
        CHECK(bp_constant(YoungFunction::loglog_bump(p, 1.0).complementary(), q).finite);
        CHECK(bp_constant(YoungFunction::loglog_bump(q, 1.0).complementary(), p).finite);
    }
}

TEST_CASE("B_p value for a conjugate log-bump matches a reference quadrature") {
    const auto conj = YoungFunction::log_bump(2.0, 1.0).complementary();
    const double q = 2.0;
    // Composite Simpson in w = log log t, twice the panel density, geometric tail.
    auto integrand_u = [&](double u) { return std::exp(conj.log_value(u) - q * u); };
    const int n_u = 4096;
    double s = 0.0;
    for (int k = 0; k <= n_u; ++k) {
        const double u = static_cast<double>(k) / n_u;
        s += (k == 0 || k == n_u ? 1 : (k % 2 ? 4 : 2)) * integrand_u(u);
    }
    s /= 3.0 * n_u;
    const double w_max = std::log(1e10);
    const int n_w = 1 << 16;
    double sw = 0.0;
    for (int k = 0; k <= n_w; ++k) {
        const double w = w_max * k / n_w;
        const double u = std::exp(w);
        sw += (k == 0 || k == n_w ? 1 : (k % 2 ? 4 : 2)) * integrand_u(u) * u;
    }
    sw *= w_max / (3.0 * n_w);
    const auto res = bp_constant(conj, q);
    REQUIRE(res.finite);
    CHECK(res.value == doctest::Approx(s + sw).epsilon(1e-3));
}

TEST_CASE("Orlicz Hoelder inequalities") {
    const Domain d = Domain::line(0.0, 1.0, 256);
    const CellRange all{0, 256};
    const auto one = GridFunction::constant(d, 1.0);
    const auto r = orlicz_holder_check(one, one, all, YoungFunction::power(2.0));
    CHECK(r.lhs == doctest::Approx(1.0).epsilon(1e-15));
    // conj(t^2) = t^2 / 4, so ||1||_{conj} = 1/2 and the right side is 1.
    CHECK(r.rhs == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.holds());
    testgen::Gen gen(99);
    const auto lb = YoungFunction::log_bump(2.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto f = gen.function(d);
        const auto g = gen.function(d);
        const CellRange q{gen.index(128), 1 + gen.index(128)};
        CHECK(orlicz_holder_check(f, g, q, lb).holds());
        CHECK(orlicz_holder_check(f, g, q, YoungFunction::power(3.0)).holds());
        // A = t^2, B = t^2, C = t: A^-1 B^-1 = C^-1 exactly, c_2 = 1 by Cauchy-Schwarz.
        CHECK(orlicz_holder_abc(f, g, q, YoungFunction::power(2.0), YoungFunction::power(2.0), YoungFunction::power(1.0))
                  .holds());
    }
    const double c1 = inverse_product_constant(YoungFunction::power(2.0), YoungFunction::power(2.0),
                                               YoungFunction::power(1.0), 1e-2, 1e2);
    CHECK(c1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Young pointwise inequality on a 100 x 100 grid") {
    for (const auto& phi : bumps()) {
        const auto conj = phi.complementary();
        double worst = -1e300;
        for (int i = 0; i < 100; ++i) {
            for (int j = 0; j < 100; ++j) {
                const double s = std::pow(10.0, -3.0 + 6.0 * i / 99.0);
                const double t = std::pow(10.0, -3.0 + 6.0 * j / 99.0);
                worst = std::max(worst, (s * t - phi(s) - conj(t)) / (s * t));
            }
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("preceq constant") {
    // t^2 <= (c t)^3 on [1, 100] needs c = 1; on [0.1, 100] it needs c = 10^(1/3).
    CHECK(preceq_constant(YoungFunction::power(2.0), YoungFunction::power(3.0), 1.0, 100.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(preceq_constant(YoungFunction::power(2.0), YoungFunction::power(3.0), 0.1, 100.0) ==
          doctest::Approx(std::cbrt(10.0)).epsilon(1e-12));
}
