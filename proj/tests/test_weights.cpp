#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "conelab/error.hpp"
#include "conelab/weights.hpp"
#include "test_support.hpp"

using namespace conelab;

namespace {

const CubeScan kAll{CubeFamily::AllIntervals, 0};
const CubeScan kDyadic{CubeFamily::Dyadic, 0};
const CubeScan kThree{CubeFamily::ThreeGrid, 0};

// Every interval of the domain by direct enumeration; on the torus lengths run to n.
template <class Fn>
void brute_intervals(const Domain& d, Fn fn) {
    for (std::size_t lo = 0; lo < d.n; ++lo) {
        const std::size_t max_len = d.periodic() ? d.n : d.n - lo;
        for (std::size_t len = 1; len <= max_len; ++len) {
            if (d.periodic() && len == d.n && lo != 0) continue;
            std::vector<std::size_t> cells;
            for (std::size_t k = 0; k < len; ++k) cells.push_back((lo + k) % d.n);
            fn(cells);
        }
    }
}

double brute_ap(const Weight& w, double p) {
    double best = 0.0;
    brute_intervals(w.domain, [&](const std::vector<std::size_t>& cells) {
        double a = 0.0, b = 0.0;
        for (auto i : cells) {
            a += w[i];
            b += std::pow(w[i], -1.0 / (p - 1.0));
        }
        const double len = static_cast<double>(cells.size());
        best = std::max(best, a / len * std::pow(b / len, p - 1.0));
    });
    return best;
}

// Luxemburg norm by plain bisection on the defining inequality, with the gauge written out.
double oracle_luxemburg(const std::vector<double>& v, double p, double delta) {
    auto gauge = [&](double t) { return std::pow(t, p) * std::pow(std::log(M_E + t), p - 1.0 + delta); };
    auto mean = [&](double lam) {
        double s = 0.0;
        for (double x : v) s += gauge(x / lam);
        return s / static_cast<double>(v.size());
    };
    double lo = 1e-12, hi = 1.0;
    while (mean(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean(mid) > 1.0 ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

TEST_CASE("constant weight has every constant equal to one") {
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -1.0, 1.0, 16);
        const Weight w = GridFunction::constant(d, 1.0);
        for (const auto& scan : {kAll, kDyadic, kThree}) {
            CHECK(ap_constant(w, 2.0, scan) == 1.0);
            CHECK(ap_constant(w, 3.5, scan) == 1.0);
            CHECK(a1_constant(w, scan) == 1.0);
            CHECK(rh_infinity_constant(w, scan) == 1.0);
            CHECK(ainfty_hp_constant(w, scan) == 1.0);
            CHECK(ainfty_exp_constant(w, scan) == 1.0);
            CHECK(apR_constant(w, 2.0, scan) == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
}

TEST_CASE("two-level weight on dyadic intervals gives 9/8") {
    const Domain d = Domain::line(0.0, 1.0, 8);
    const Weight w = make_weight(d, "two-level");
    CHECK(w[3] == 1.0);
    CHECK(w[4] == 2.0);
    CHECK(ap_constant(w, 2.0, kDyadic) == 1.125);
}

TEST_CASE("A_p against direct enumeration") {
    testgen::Gen gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mode = gen.coin() ? DomainMode::TruncatedLine : DomainMode::PeriodicTorus;
        const Domain d = Domain::make(mode, 0.0, 1.0, 16);
        const Weight w = gen.weight(d);
        const double p = gen.uniform(1.1, 4.0);
        CHECK(ap_constant(w, p, kAll) == doctest::Approx(brute_ap(w, p)).epsilon(1e-13));
        CHECK(ap_constant(w, p, kAll) >= 1.0);
        CHECK(ap_constant(w, p, kDyadic) <= ap_constant(w, p, kAll) * (1.0 + 1e-14));
    }
}

TEST_CASE("A_1 and RH_infinity against direct enumeration") {
    testgen::Gen gen(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mode = gen.coin() ? DomainMode::TruncatedLine : DomainMode::PeriodicTorus;
        const Domain d = Domain::make(mode, 0.0, 1.0, 32);
        const Weight w = gen.weight(d);
        double a1 = 0.0, rh = 0.0;
        brute_intervals(d, [&](const std::vector<std::size_t>& cells) {
            double s = 0.0, lo = 1e300, hi = 0.0;
            for (auto i : cells) {
                s += w[i];
                lo = std::min(lo, w[i]);
                hi = std::max(hi, w[i]);
            }
            const double avg = s / static_cast<double>(cells.size());
            a1 = std::max(a1, avg / lo);
            rh = std::max(rh, hi / avg);
        });
        CHECK(a1_constant(w, kAll) == doctest::Approx(a1).epsilon(1e-13));
        CHECK(rh_infinity_constant(w, kAll) == doctest::Approx(rh).epsilon(1e-13));
    }
}

TEST_CASE("Hytonen-Perez constant matches an exhaustive cube scan") {
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -1.0, 1.0, 32);
        for (const char* spec : {"two-level", "two-level 1 7"}) {
            const Weight w = make_weight(d, spec);
            double best = 0.0;
            brute_intervals(d, [&](const std::vector<std::size_t>& q) {
                std::vector<char> in_q(d.n, 0);
                double wq = 0.0;
                for (auto i : q) {
                    in_q[i] = 1;
                    wq += w[i];
                }
                // M(w 1_Q)(x) over every interval of the domain containing x.
                std::vector<double> m(d.n, 0.0);
                brute_intervals(d, [&](const std::vector<std::size_t>& cells) {
                    double s = 0.0;
                    for (auto i : cells) s += in_q[i] ? w[i] : 0.0;
                    const double avg = s / static_cast<double>(cells.size());
                    for (auto i : cells) m[i] = std::max(m[i], avg);
                });
                double integral_m = 0.0;
                for (auto i : q) integral_m += m[i];
                best = std::max(best, integral_m / wq);
            });
            CHECK(ainfty_hp_constant(w, kAll) == doctest::Approx(best).epsilon(1e-13));
        }
    }
}

TEST_CASE("A_infinity chain: exponential constant below A_p, Hytonen-Perez constant bounded") {
    const Domain d = Domain::line(-4.0, 4.0, 64);
    double worst = 0.0;
    for (const auto& [name, w] : default_weight_corpus(d)) {
        CAPTURE(name);
        const double ap = ap_constant(w, 2.0, kThree);
        const double ex = ainfty_exp_constant(w, kThree);
        const double hp = ainfty_hp_constant(w, kThree);
        CHECK(ex >= 1.0 - 1e-14);
        CHECK(ex <= ap * (1.0 + 1e-13));
        CHECK(hp >= 1.0);
        CHECK(std::isfinite(hp));
        worst = std::max(worst, hp / ap);
    }
    MESSAGE("measured c with [w]'_Ainf <= c [w]_A2: " << worst);
    CHECK(worst < 10.0);
}

TEST_CASE("A_p^R equals the exhaustive subset maximum") {
    testgen::Gen gen(13);
    const Domain d = Domain::line(0.0, 1.0, 8);
    for (int trial = 0; trial < 10; ++trial) {
        const Weight w = gen.weight(d);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            double best = 0.0;
            brute_intervals(d, [&](const std::vector<std::size_t>& q) {
                const std::size_t len = q.size();
                double wq = 0.0;
                for (auto i : q) wq += w[i];
                for (unsigned mask = 1; mask < (1u << len); ++mask) {
                    double we = 0.0;
                    int count = 0;
                    for (std::size_t k = 0; k < len; ++k) {
                        if (mask & (1u << k)) {
                            we += w[q[k]];
                            ++count;
                        }
                    }
                    best = std::max(best, count / static_cast<double>(len) * std::pow(wq / we, 1.0 / p));
                }
            });
            CHECK(apR_constant(w, p, kAll) == doctest::Approx(best).epsilon(1e-13));
        }
    }
}

TEST_CASE("A_p^R is nonincreasing in p and finite on the corpus") {
    const Domain d = Domain::torus(-4.0, 4.0, 64);
    for (const auto& [name, w] : default_weight_corpus(d)) {
        CAPTURE(name);
        double prev = apR_constant(w, 1.0, kDyadic);
        CHECK(std::isfinite(prev));
        CHECK(prev >= 1.0);
        for (double p : {1.25, 1.5, 2.0, 3.0, 6.0}) {
            const double now = apR_constant(w, p, kDyadic);
            CHECK(now <= prev * (1.0 + 1e-15));
            CHECK(now >= 1.0 - 1e-15);
            prev = now;
        }
    }
}

TEST_CASE("reverse factorization on generated A_1 pairs") {
    testgen::Gen gen(14);
    const Domain d = Domain::line(-1.0, 1.0, 64);
    for (int trial = 0; trial < 6; ++trial) {
        GridFunction s1 = gen.function(d).abs();
        GridFunction s2 = gen.function(d).abs();
        s1[gen.index(d.n)] += 1.0;
        s2[gen.index(d.n)] += 1.0;
        const auto w1 = coifman_rochberg_generate(s1, gen.uniform(0.1, 0.9), YoungFunction::power(1.0));
        const auto w2 = coifman_rochberg_generate(s2, gen.uniform(0.1, 0.9), YoungFunction::power(1.0));
        for (double p : {1.5, 2.0, 4.0}) {
            Weight w = w1.weight;
            for (std::size_t i = 0; i < d.n; ++i) w[i] *= std::pow(w2.weight[i], 1.0 - p);
            const double lhs = ap_constant(w, p, kAll);
            const double rhs = a1_constant(w1.weight, kAll) * std::pow(a1_constant(w2.weight, kAll), p - 1.0);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("bump constants for constant weights and power gauges") {
    const Domain d = Domain::line(0.0, 1.0, 16);
    const Weight one = GridFunction::constant(d, 1.0);
    for (double p : {1.5, 2.0, 3.0}) {
        const double pp = p / (p - 1.0);
        const auto b = bump_constants(one, one, YoungFunction::power(p), YoungFunction::power(pp), p, kAll);
        CHECK(b.two_weight_ap == 1.0);
        CHECK(b.double_bump == doctest::Approx(1.0).epsilon(1e-14));
        // Power gauges are not bumps: the conjugate integral diverges.
        CHECK_FALSE(b.b_bar.finite);
        CHECK(b.hypothesis_violated);
        CHECK(std::isinf(b.bound));
    }
}

TEST_CASE("log-bump constants for power weights match a dense cube scan") {
    const Domain d = Domain::line(0.125, 1.0, 32);
    const Weight u = make_weight(d, "power 0.5");
    const double p = 2.0, delta = 1.0;
    const auto a = YoungFunction::log_bump(p, delta);
    const auto b = YoungFunction::log_bump(p / (p - 1.0), delta);
    const auto got = bump_constants(u, u, a, b, p, kAll);
    double want = 0.0, want_sep_b = 0.0;
    brute_intervals(d, [&](const std::vector<std::size_t>& q) {
        std::vector<double> ur, vr;
        double su = 0.0;
        for (auto i : q) {
            ur.push_back(std::sqrt(u[i]));
            vr.push_back(1.0 / std::sqrt(u[i]));
            su += u[i];
        }
        const double bv = oracle_luxemburg(vr, 2.0, delta);
        want = std::max(want, oracle_luxemburg(ur, 2.0, delta) * bv);
        want_sep_b = std::max(want_sep_b, std::sqrt(su / static_cast<double>(q.size())) * bv);
    });
    CHECK(std::isfinite(got.double_bump));
    CHECK(got.double_bump == doctest::Approx(want).epsilon(1e-9));
    CHECK(got.separated_b == doctest::Approx(want_sep_b).epsilon(1e-9));
    CHECK(got.split_norm == got.separated_b);
    // Both bumps dominate the plain powers pointwise, so the double bump dominates.
    CHECK(got.separated_a <= got.double_bump * (1.0 + 1e-9));
    CHECK(got.separated_b <= got.double_bump * (1.0 + 1e-9));
    CHECK(got.two_weight_ap <= got.separated_b * (1.0 + 1e-9));
    CHECK(got.a_bar_dual.finite);
    CHECK(got.b_bar.finite);
    CHECK_FALSE(got.hypothesis_violated);
    CHECK(std::isfinite(got.bound));
}

TEST_CASE("log-bump pairs satisfy the dual B_p conditions") {
    for (double p : {1.5, 2.0, 3.0}) {
        const double pp = p / (p - 1.0);
        const auto d = Domain::line(0.0, 1.0, 8);
        const Weight one = GridFunction::constant(d, 1.0);
        const auto b = bump_constants(one, one, YoungFunction::log_bump(p, 1.0), YoungFunction::log_bump(pp, 1.0), p,
                                      kDyadic);
        CAPTURE(p);
        CHECK(b.a_bar_dual.finite);
        CHECK(b.b_bar.finite);
    }
}

TEST_CASE("Rubio de Francia over M") {
    testgen::Gen gen(15);
    const Domain d = Domain::line(-1.0, 1.0, 64);
    RdFConfig cfg;
    SUBCASE("zero input") {
        const auto r = rubio_de_francia(GridFunction::zeros(d), cfg);
        CHECK(r.value.max_abs() == 0.0);
    }
    SUBCASE("majorant and A_1 bound") {
        for (int trial = 0; trial < 5; ++trial) {
            const GridFunction h = gen.function(d).abs();
            const auto r = rubio_de_francia(h, cfg);
            CHECK(r.operator_norm >= 1.0);
            CHECK(r.decay <= 0.5 + 1e-12);
            for (std::size_t i = 0; i < d.n; ++i) CHECK(h[i] <= r.value[i]);
            // M(Rh) <= 2K (Rh - h) + 2K * omitted term, pointwise.
            const auto m = hl_maximal(r.value);
            double worst = 0.0;
            for (std::size_t i = 0; i < d.n; ++i) {
                worst = std::max(worst, (m[i] - 2.0 * r.operator_norm * r.last_term) / r.value[i]);
            }
            CHECK(worst <= 2.0 * r.operator_norm * (1.0 + 1e-12));
            CHECK(a1_constant(r.value, kAll) <= 2.0 * r.operator_norm * (1.0 + 1e-6));
            // ||Rh||_{r'} <= 2 ||h||_{r'} when the measured norm is a true bound.
            CHECK(lp_norm(r.value, 2.0) <= 2.0 * lp_norm(h, 2.0) * (1.0 + 1e-9));
        }
    }
    SUBCASE("underestimated majorant is reported") {
        cfg.operator_norm = 0.3;
        CHECK_THROWS_AS(rubio_de_francia(gen.function(d).abs(), cfg), NumericalError);
    }
    SUBCASE("negative input rejected") {
        CHECK_THROWS_AS(rubio_de_francia(GridFunction::constant(d, -1.0), cfg), PreconditionError);
    }
}

TEST_CASE("Rubio de Francia over T_u") {
    testgen::Gen gen(16);
    const Domain d = Domain::line(-1.0, 1.0, 64);
    RdFConfig cfg;
    for (const char* us : {"two-level", "power 0.5", "cr 0.5"}) {
        CAPTURE(us);
        const Weight u = make_weight(d, us);
        const Weight v = make_weight(d, "power -0.5");
        const GridFunction h = gen.function(d).abs();
        const auto r = rubio_de_francia_tu(h, u, v, cfg);
        for (std::size_t i = 0; i < d.n; ++i) CHECK(h[i] <= r.value[i]);
        const auto t = tu_operator(r.value, u);
        for (std::size_t i = 0; i < d.n; ++i) {
            CHECK(t[i] <= 2.0 * r.operator_norm * (r.value[i] + r.last_term) * (1.0 + 1e-12));
        }
        const GridFunction uv = u.times(v);
        CHECK(lorentz_p1_norm(r.value, 2.0, &uv) <= 2.0 * lorentz_p1_norm(h, 2.0, &uv) * (1.0 + 1e-9));
        GridFunction combined = r.value;
        for (std::size_t i = 0; i < d.n; ++i) combined[i] = r.value[i] * u[i] * std::sqrt(v[i]);
        CHECK(std::isfinite(ainfty_hp_constant(combined, kDyadic)));
    }
}

TEST_CASE("Coifman-Rochberg generation") {
    const Domain d = Domain::line(-1.0, 1.0, 64);
    SUBCASE("constant input") {
        const auto g = coifman_rochberg_generate(GridFunction::constant(d, 1.0), 0.5, YoungFunction::power(1.0));
        CHECK(g.weight.max_abs() == 1.0);
        CHECK(g.constant == 1.0);
    }
    SUBCASE("point mass: finite A_1, growing like 1/(1-delta)") {
        GridFunction sigma = GridFunction::zeros(d);
        sigma[20] = 1.0;
        double prev = 0.0;
        for (double delta : {0.25, 0.5, 0.75, 0.9}) {
            const auto g = coifman_rochberg_generate(sigma, delta, YoungFunction::power(1.0), kAll);
            CHECK(std::isfinite(g.constant));
            CHECK(g.constant > prev);
            MESSAGE("delta " << delta << " A_1 " << g.constant << " times (1-delta) " << g.constant * (1 - delta));
            CHECK(g.constant * (1.0 - delta) < 2.0);
            prev = g.constant;
        }
        const auto rev = coifman_rochberg_reverse(sigma, 0.5, YoungFunction::power(1.0), kAll);
        CHECK(std::isfinite(rev.constant));
        CHECK(rev.constant >= 1.0);
    }
    SUBCASE("refinement stability") {
        for (double delta : {0.25, 0.5}) {
            double prev = 0.0;
            for (std::size_t n : {64u, 128u, 256u}) {
                const Domain dn = Domain::line(-1.0, 1.0, n);
                GridFunction sigma = GridFunction::zeros(dn);
                sigma[dn.cell_of(-0.4)] = 1.0;
                const double c = coifman_rochberg_generate(sigma, delta, YoungFunction::power(1.0), kAll).constant;
                if (prev > 0.0) CHECK(std::fabs(c / prev - 1.0) < 0.1);
                prev = c;
            }
        }
    }
    SUBCASE("zero input rejected") {
        CHECK_THROWS_AS(coifman_rochberg_generate(GridFunction::zeros(d), 0.5, YoungFunction::power(1.0)),
                        PreconditionError);
        CHECK_THROWS_AS(coifman_rochberg_generate(GridFunction::constant(d, 1.0), 1.0, YoungFunction::power(1.0)),
                        PreconditionError);
    }
}

TEST_CASE("weight generators") {
    const Domain d = Domain::line(-4.0, 4.0, 64);
    const auto corpus = default_weight_corpus(d, 42);
    CHECK(corpus.size() == 8);
    for (const auto& [name, w] : corpus) {
        CAPTURE(name);
        for (double x : w.values) CHECK(x > 0.0);
    }
    const auto again = default_weight_corpus(d, 42);
    for (std::size_t k = 0; k < corpus.size(); ++k) CHECK(corpus[k].second.values == again[k].second.values);
    CHECK(make_weight(d, "power 0.5")[0] == doctest::Approx(std::sqrt(4.0 - 0.0625)));
    CHECK(make_weight(d, "spike 50").max_abs() == 50.0);
    CHECK_THROWS_AS(make_weight(d, "bogus"), PreconditionError);
    CHECK_THROWS_AS(make_weight(d, "power x"), PreconditionError);
    CHECK_THROWS_AS(make_weight(d, "constant -1"), PreconditionError);
}
