#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "conelab/error.hpp"
#include "conelab/square.hpp"
#include "test_support.hpp"

using namespace conelab;

namespace {

const double kPi = 3.14159265358979323846;

KernelField laplacian_field(const Domain& d, Fluctuation kind = Fluctuation::Plain, int per_octave = 16) {
    return KernelField(d, OperatorSpec::laplacian(), kind, TimeGrid::make(2 * d.h(), d.length(), per_octave));
}

// Composite Simpson on [a, b] with an even number of panels.
double simpson(const std::function<double(double)>& g, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double step = (b - a) / panels;
    double s = g(a) + g(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * step);
    return s * step / 3.0;
}

// Trapezoid weights in log t, the oracle's own copy of the quadrature rule.
std::vector<double> log_trapezoid(const std::vector<double>& t) {
    std::vector<double> w(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double left = std::log(t[i == 0 ? 0 : i - 1]);
        const double right = std::log(t[i + 1 == t.size() ? i : i + 1]);
        w[i] = 0.5 * (right - left);
    }
    return w;
}

double periodic_distance(const Domain& d, std::size_t x, std::size_t y) {
    const std::size_t gap = x > y ? x - y : y - x;
    return static_cast<double>(d.periodic() ? std::min(gap, d.n - gap) : gap) * d.h();
}

}  // namespace

TEST_CASE("cone profile is a monotone cutoff between the unit and double balls") {
    double prev = 1.0;
    for (int i = 0; i <= 3000; ++i) {
        const double r = i * 1e-3;
        const double v = cone_profile(r);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v <= prev);
        if (r <= 1.0) CHECK(v == 1.0);
        if (r >= 2.0) CHECK(v == 0.0);
        CHECK(cone_profile(-r) == v);
        prev = v;
    }
}

TEST_CASE("zero input gives zero square functions") {
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -2.0, 2.0, 64);
        const auto field = laplacian_field(d);
        const auto zero = GridFunction::zeros(d);
        CHECK(conical_square(zero, field, {}).max_abs() == 0.0);
        CHECK(conical_square(zero, field, {}, true).max_abs() == 0.0);
        CHECK(vertical_square(zero, field).max_abs() == 0.0);
        CHECK(gstar_square(zero, field).max_abs() == 0.0);
        const auto spec = make_commutator_spec(GridFunction::sample(d, [](double x) { return x; }));
        CHECK(commutator_square(zero, field, {}, spec).max_abs() == 0.0);
    }
}

TEST_CASE("sandwich and aperture monotonicity hold exactly") {
    testgen::Gen gen(7);
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -4.0, 4.0, 128);
        for (auto kind : {Fluctuation::Plain, Fluctuation::Gradient}) {
            const auto field = laplacian_field(d, kind, 8);
            for (int trial = 0; trial < 4; ++trial) {
                const auto f = gen.function(d);
                for (double alpha : {1.0, 1.5, 2.0}) {
                    const ConeConfig cone{alpha};
                    const auto tri = cone_triple(f, field, cone);
                    const auto narrow = conical_square(f, field, cone);
                    const auto smooth = conical_square(f, field, cone, true);
                    const auto wide = conical_square(f, field, ConeConfig{2 * alpha});
                    std::size_t violations = 0, mismatches = 0;
                    for (std::size_t x = 0; x < d.n; ++x) {
                        violations += tri.narrow[x] > tri.smooth[x];
                        violations += tri.smooth[x] > tri.wide[x];
                        mismatches += tri.narrow[x] != narrow[x];
                        mismatches += tri.smooth[x] != smooth[x];
                        mismatches += tri.wide[x] != wide[x];
                    }
                    CHECK(violations == 0);
                    CHECK(mismatches == 0);
                }
                const double a1 = gen.uniform(1.0, 3.0), a2 = a1 + gen.uniform(0.0, 3.0);
                const auto s1 = conical_square(f, field, ConeConfig{a1});
                const auto s2 = conical_square(f, field, ConeConfig{a2});
                std::size_t order = 0;
                for (std::size_t x = 0; x < d.n; ++x) order += s1[x] > s2[x];
                CHECK(order == 0);
            }
        }
    }
}

TEST_CASE("Gaussian bump at the origin matches a refined quadrature") {
    const Domain d = Domain::line(-4.0, 4.0, 1024);
    const auto field = laplacian_field(d);
    const auto f = GridFunction::sample(d, [](double x) { return std::exp(-x * x); });
    const std::size_t cell = d.n / 2;
    const double x = d.x(cell);
    const double got = conical_square(f, field, ConeConfig{1.0})[cell];

    // Q_t f for f = exp(-y^2): -s d/ds of (1+4s)^(-1/2) exp(-y^2/(1+4s)) at s = t^2.
    auto qt = [](double t, double y) {
        const double s = t * t, a = 1.0 + 4.0 * s;
        const double u = std::exp(-y * y / a) / std::sqrt(a);
        return s * u * (2.0 / a - 4.0 * y * y / (a * a));
    };
    const double t_min = field.times().t.front(), t_max = field.times().t.back();
    auto inner = [&](double logt) {
        const double t = std::exp(logt);
        const double lo = std::max(x - t, d.left), hi = std::min(x + t, d.right);
        return simpson([&](double y) { return qt(t, y) * qt(t, y); }, lo, hi, 512) / t;
    };
    const int octaves = static_cast<int>(std::round(std::log2(t_max / t_min)));
    const double want = std::sqrt(simpson(inner, std::log(t_min), std::log(t_max), 64 * octaves));
    MESSAGE("S(0) = " << got << ", refined oracle " << want);
    CHECK(std::fabs(got - want) <= 0.01 * want);
}

TEST_CASE("vertical square function of a torus mode") {
    const Domain d = Domain::torus(0.0, 1.0, 256);
    const auto field = laplacian_field(d);
    const double t_min = field.times().t.front(), t_max = field.times().t.back();
    for (int k : {1, 3, 8}) {
        const double w = 2 * kPi * k;
        const auto f = GridFunction::sample(d, [&](double x) { return std::cos(w * x); });
        const auto g = vertical_square(f, field);
        auto integrand = [&](double logt) {
            const double u = std::exp(2 * logt) * w * w;
            return u * u * std::exp(-2 * u);
        };
        const double amp = std::sqrt(simpson(integrand, std::log(t_min), std::log(t_max), 20000));
        for (std::size_t i = 0; i < d.n; i += 5) CHECK(std::fabs(g[i] - amp * std::fabs(f[i])) <= 1e-4 * amp);
        // The untruncated integral is 1/8. Below t_min it loses at most u0^2/4 with
        // u0 = (t_min w)^2; above t_max the loss is below exp(-2 u1) (u1 + 1/2) / 2.
        const double u0 = std::pow(t_min * w, 2), u1 = std::pow(t_max * w, 2);
        CHECK(amp * amp <= 0.125);
        CHECK(amp * amp >= 0.125 - u0 * u0 / 4 - std::exp(-2 * u1) * (u1 + 0.5) / 2 - 1e-12);
    }
}

TEST_CASE("g*: hypothesis, comparison with g and with the cone series") {
    const Domain d0 = Domain::line(-4.0, 4.0, 128);
    const auto f0 = GridFunction::sample(d0, [](double x) { return std::exp(-x * x); });
    const auto field0 = laplacian_field(d0);
    try {
        gstar_square(f0, field0, GStarConfig{2.0});
        FAIL("expected a precondition failure");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("hypothesis λ>2 violated") != std::string::npos);
    }

    double ratio_g[2] = {0, 0}, ratio_series[2] = {0, 0}, ratio_d[2] = {0, 0};
    for (int level = 0; level < 2; ++level) {
        const Domain d = Domain::line(-4.0, 4.0, 128u << level);
        auto fn = [](double x) { return std::exp(-x * x) * std::cos(3 * x) + (std::fabs(x - 1) < 0.5 ? 1.0 : 0.0); };
        const auto f = GridFunction::sample(d, fn);
        const auto plain = laplacian_field(d, Fluctuation::Plain, 8);
        const auto grad = laplacian_field(d, Fluctuation::Gradient, 8);
        const GStarConfig cfg{3.0, 6};
        const auto g = vertical_square(f, plain);
        const auto gd = vertical_square(f, grad);
        const auto gs = gstar_square(f, plain, cfg);
        const auto series = cone_series(f, plain, cfg);
        for (std::size_t x = 0; x < d.n; ++x) {
            REQUIRE(gs[x] > 0.0);
            ratio_g[level] = std::max(ratio_g[level], g[x] / gs[x]);
            ratio_d[level] = std::max(ratio_d[level], gd[x] / gs[x]);
            ratio_series[level] = std::max(ratio_series[level], gs[x] / series[x]);
        }
    }
    MESSAGE("g/g* " << ratio_g[0] << " -> " << ratio_g[1] << ", g_D/g* " << ratio_d[0] << " -> " << ratio_d[1]
                    << ", g*/series " << ratio_series[0] << " -> " << ratio_series[1]);
    for (const double* r : {ratio_g, ratio_d, ratio_series}) {
        CHECK(std::isfinite(r[1]));
        CHECK(std::fabs(r[1] - r[0]) <= 0.15 * r[0]);
    }
}

TEST_CASE("commutator square function") {
    testgen::Gen gen(3);
    for (auto mode : {DomainMode::TruncatedLine, DomainMode::PeriodicTorus}) {
        const Domain d = Domain::make(mode, -2.0, 2.0, 128);
        const auto field = laplacian_field(d, Fluctuation::Plain, 8);
        const auto f = gen.function(d);

        const auto flat = make_commutator_spec(GridFunction::constant(d, 0.7));
        CHECK(flat.bmo == 0.0);
        CHECK(commutator_square(f, field, {}, flat).max_abs() == 0.0);

        const auto b = GridFunction::sample(d, [](double x) { return std::log(std::fabs(x)); });
        const auto spec = make_commutator_spec(b);
        const ConeConfig cone{1.5};
        const auto got = commutator_square(f, field, cone, spec);

        // Homogeneity: a power of two scales every rounding step exactly.
        const auto scaled = commutator_square(f.scaled(-4.0), field, cone, spec);
        const auto tripled = commutator_square(f.scaled(3.0), field, cone, spec);
        for (std::size_t x = 0; x < d.n; ++x) {
            CHECK(scaled[x] == 4.0 * got[x]);
            CHECK(tripled[x] == doctest::Approx(3.0 * got[x]).epsilon(1e-12));
        }

        // Direct double quadrature of Q_t[(b(x) - b) f] without the identity.
        const auto& times = field.times().t;
        const auto weights = log_trapezoid(times);
        for (std::size_t x = 3; x < d.n; x += 17) {
            double sum = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k) {
                const double t = times[k];
                for (std::size_t y = 0; y < d.n; ++y) {
                    if (!(periodic_distance(d, x, y) < cone.alpha * t)) continue;
                    double q = 0.0;
                    for (std::size_t z = 0; z < d.n; ++z) q += field.kernel(k, y, z) * (b[x] - b[z]) * f[z] * d.h();
                    sum += weights[k] * d.h() / t * q * q;
                }
            }
            const double want = std::sqrt(sum);
            CHECK(std::fabs(got[x] - want) <= 1e-8 * want);
        }
    }
}

TEST_CASE("BMO norm") {
    const Domain unit = Domain::line(0.0, 1.0, 64);
    CHECK(bmo_norm(GridFunction::constant(unit, -3.25)) == 0.0);
    const auto step = GridFunction::sample(unit, [](double x) { return x < 0.5 ? 1.0 : 0.0; });
    CHECK(bmo_norm(step) == 0.5);
    double prev = 0.0;
    for (std::size_t n : {256u, 512u}) {
        const Domain d = Domain::line(-4.0, 4.0, n);
        const auto b = GridFunction::sample(d, [](double x) { return std::log(std::fabs(x)); });
        const double v = bmo_norm(b);
        MESSAGE("||log|x|||_BMO at N=" << n << ": " << v);
        CHECK(std::isfinite(v));
        if (prev > 0.0) CHECK(std::fabs(v - prev) <= 0.15 * prev);
        prev = v;
    }
}

TEST_CASE("scaling covariance of the conical square function") {
    // f_2(y) = f(2y) on [-4,4) against f on [-8,8) with times doubled.
    auto fn = [](double x) { return std::exp(-x * x) * (1.0 + 0.5 * std::sin(2 * x)); };
    const Domain small = Domain::line(-4.0, 4.0, 512);
    const Domain large = Domain::line(-8.0, 8.0, 512);
    const auto fs = GridFunction::sample(small, [&](double x) { return fn(2 * x); });
    const auto fl = GridFunction::sample(large, fn);
    const KernelField field_s(small, OperatorSpec::laplacian(), Fluctuation::Plain, TimeGrid::make(2 * small.h(), 4.0));
    const KernelField field_l(large, OperatorSpec::laplacian(), Fluctuation::Plain, TimeGrid::make(2 * large.h(), 8.0));
    const auto ss = conical_square(fs, field_s, ConeConfig{1.0});
    const auto sl = conical_square(fl, field_l, ConeConfig{1.0});
    for (std::size_t x = 0; x < small.n; ++x) CHECK(std::fabs(ss[x] - sl[x]) <= 1e-4 * sl.max_abs());
}

TEST_CASE("preconditions and tail report") {
    const Domain d = Domain::line(-4.0, 4.0, 256);
    const auto field = laplacian_field(d);
    const auto f = GridFunction::sample(d, [](double x) { return std::exp(-x * x); });
    try {
        conical_square(f, field, ConeConfig{1.0, d.h()});
        FAIL("expected a precondition failure");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("cone finer than grid") != std::string::npos);
    }
    CHECK_THROWS_AS(conical_square(f, field, ConeConfig{0.5}), PreconditionError);
    CHECK_THROWS_AS(conical_square(GridFunction::zeros(Domain::line(-4.0, 4.0, 128)), field, {}), PreconditionError);

    const auto tail = cone_tail(f, field, ConeConfig{1.0});
    // sup_t t |q_t| is attained on the diagonal: t q_t(0) = 1 / (2 sqrt(4 pi)).
    CHECK(tail.kernel_constant == doctest::Approx(0.5 / std::sqrt(4 * kPi)).epsilon(1e-2));
    CHECK(tail.large_t_bound > 0.0);
    CHECK(tail.first_octave_share > 0.0);
    // For smooth f, Q_t f = O(t^2): the lowest octave loses weight under refinement.
    const Domain fine = Domain::line(-4.0, 4.0, 512);
    const auto fine_tail = cone_tail(GridFunction::sample(fine, [](double x) { return std::exp(-x * x); }),
                                     laplacian_field(fine), ConeConfig{1.0});
    MESSAGE("first-octave share " << tail.first_octave_share << " -> " << fine_tail.first_octave_share);
    CHECK(fine_tail.first_octave_share < tail.first_octave_share);

    const auto meta = square_metadata(field, "conical", 2.0, 3.0);
    CHECK(meta.size() == 6);
    CHECK(meta[0] == "operator=laplacian");
}
