#include "conelab/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "conelab/dyadic.hpp"
#include "conelab/error.hpp"
#include "conelab/maximal.hpp"
#include "conelab/orlicz.hpp"
#include "conelab/random.hpp"
#include "conelab/weights.hpp"

namespace conelab {

namespace {

constexpr double kRefLeft = -4.0;
constexpr double kRefLength = 8.0;

double to_reference(const Domain& d, double x) { return kRefLeft + kRefLength * (x - d.left) / d.length(); }

// Cell [a, b) of the domain in reference coordinates.
std::pair<double, double> reference_cell(const Domain& d, std::size_t i) {
    const double hr = kRefLength / static_cast<double>(d.n);
    return {kRefLeft + static_cast<double>(i) * hr, kRefLeft + static_cast<double>(i + 1) * hr};
}

double overlap(std::pair<double, double> cell, double a, double b) {
    return std::max(0.0, std::min(cell.second, b) - std::max(cell.first, a));
}

double ratio_of(double lhs, double rhs) {
    if (lhs == 0.0) return 0.0;
    if (rhs == 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// sup_x a(x) / b(x) over the cells where b > 0 (and, if given, the mask holds).
double pointwise_sup(const GridFunction& a, const GridFunction& b, const std::vector<char>* mask = nullptr) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        best = std::max(best, ratio_of(a[i], b[i]));
    }
    return best;
}

std::vector<char> level_set(const GridFunction& f, double t) {
    std::vector<char> mask(f.size(), 0);
    for (std::size_t i = 0; i < f.size(); ++i) mask[i] = f[i] > t;
    return mask;
}

// int Phi(|f| / t) w dx
double gauge_integral(const GridFunction& f, const YoungFunction& phi, double t, const Weight& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = std::fabs(f[i]);
        if (a != 0.0) s += phi(a / t) * w[i];
    }
    return s * f.domain.h();
}

std::string join_alpha(double alpha) { return "a=" + fmt(alpha); }

std::vector<double> exponents(const VerifyContext& ctx, std::vector<double> defaults) {
    return ctx.config().p_values.empty() ? defaults : ctx.config().p_values;
}

const CubeScan kThreeGrid{CubeFamily::ThreeGrid, 0};
const CubeScan kAllIntervals{CubeFamily::AllIntervals, 0};

// Results of one suite at one refinement level.
struct LevelResult {
    std::vector<SuiteCase> cases;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<SuiteCheck> checks;
    std::vector<DecayFit> fits;
    std::size_t vacuous_cases = 0;
    std::size_t live_cases = 0;
    std::string note;

    void raise(const std::string& name, double value) {
        for (auto& [n, v] : constants) {
            if (n == name) {
                v = std::max(v, value);
                return;
            }
        }
        constants.emplace_back(name, value);
    }
    void add_case(const std::string& constant, const std::string& label, double lhs, double rhs) {
        const double r = ratio_of(lhs, rhs);
        cases.push_back({label, lhs, rhs, r});
        raise(constant, r);
        ++live_cases;
    }
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        checks.push_back({name, ok, detail});
    }
};

using LevelFn = LevelResult (*)(VerifyContext&, std::size_t);

// ---------------------------------------------------------------- corpus ---

double window(double x, double centre, double radius) {
    const double u = (x - centre) / radius;
    if (std::fabs(u) >= 1.0) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * u);
    return c * c;
}

double indicator(double x, double a, double b) { return x >= a && x < b ? 1.0 : 0.0; }

std::vector<double> power_weight_cells(const Domain& d, double a) {
    // Exact cell averages of |x|^a in reference coordinates.
    auto antiderivative = [a](double x) {
        const double m = std::pow(std::fabs(x), a + 1.0) / (a + 1.0);
        return x < 0.0 ? -m : m;
    };
    std::vector<double> out(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        const auto [lo, hi] = reference_cell(d, i);
        out[i] = (antiderivative(hi) - antiderivative(lo)) / (hi - lo);
    }
    return out;
}

}  // namespace

std::vector<CorpusFunction> function_corpus(std::size_t count, std::uint64_t seed) {
    struct Gauss {
        double c, s;
    };
    const std::vector<Gauss> gauss = {{0.0, 0.25}, {0.5, 0.1}, {-1.0, 0.5}, {1.5, 0.2}, {0.0, 0.8}};
    struct Chirp {
        double c, radius, rate, freq;
    };
    const std::vector<Chirp> chirps = {
        {0.0, 1.5, 4.0, 0.0}, {0.5, 1.0, 10.0, 2.0}, {-1.0, 2.0, 2.0, 1.0}, {1.0, 1.0, 20.0, 0.0}, {0.0, 2.5, 6.0, -3.0}};
    using Fn = std::function<double(double)>;
    const std::vector<Fn> steps = {
        [](double x) { return indicator(x, -1.0, 0.0) - indicator(x, 0.0, 1.0); },
        [](double x) { return indicator(x, 0.0, 0.5); },
        [](double x) { return indicator(x, -2.0, 2.0); },
        [](double x) { return indicator(x, 1.0, 1.25) - indicator(x, 1.25, 1.5); },
        [](double x) { return indicator(x, -3.0, -1.0) + 2.0 * indicator(x, 1.0, 1.5); },
    };
    Rng rng(seed);
    std::vector<std::vector<double>> pieces(5);
    for (auto& p : pieces) {
        p.resize(16);
        for (double& v : p) v = rng.normal();
    }

    std::vector<CorpusFunction> all;
    for (std::size_t k = 0; k < 5; ++k) {
        const Gauss g = gauss[k];
        all.push_back({"gauss-" + std::to_string(k),
                       [g](double x) { return std::exp(-(x - g.c) * (x - g.c) / (2.0 * g.s * g.s)); }, false});
        all.push_back({"step-" + std::to_string(k), steps[k], true});
        const Chirp c = chirps[k];
        all.push_back({"chirp-" + std::to_string(k),
                       [c](double x) {
                           const double u = x - c.c;
                           return window(x, c.c, c.radius) * std::sin(c.rate * u * u + c.freq * u);
                       },
                       true});
        const auto values = pieces[k];
        all.push_back({"piecewise-" + std::to_string(k),
                       [values](double x) {
                           if (x < -2.0 || x >= 2.0) return 0.0;
                           return values[static_cast<std::size_t>(std::min(15.0, std::floor((x + 2.0) * 4.0)))];
                       },
                       true});
    }
    require(count >= 1 && count <= all.size(), "corpus size must lie in [1, 20]");
    all.resize(count);
    return all;
}

GridFunction sample_corpus(const Domain& d, const CorpusFunction& f) {
    return GridFunction::sample(d, [&](double x) { return f.profile(to_reference(d, x)); });
}

std::vector<std::pair<std::string, Weight>> verify_weight_corpus(const Domain& d, std::uint64_t seed) {
    std::vector<std::pair<std::string, Weight>> out;
    out.emplace_back("constant", GridFunction::constant(d, 1.0));
    out.emplace_back("two-level", GridFunction::sample(d, [&](double x) { return to_reference(d, x) < 0.0 ? 1.0 : 2.0; }));
    out.emplace_back("power 0.5", GridFunction(d, power_weight_cells(d, 0.5)));
    out.emplace_back("power -0.5", GridFunction(d, power_weight_cells(d, -0.5)));

    // Coifman-Rochberg weights from a fixed interval of width 1/64.
    GridFunction sigma = GridFunction::zeros(d);
    const double hr = kRefLength / static_cast<double>(d.n);
    for (std::size_t i = 0; i < d.n; ++i) sigma[i] = overlap(reference_cell(d, i), -1.5, -1.5 + 1.0 / 64) / hr;
    for (double delta : {0.5, 0.9}) {
        out.emplace_back("cr " + fmt(delta),
                         coifman_rochberg_generate(sigma, delta, YoungFunction::power(1.0), kAllIntervals).weight);
    }

    Rng rng(seed);
    std::vector<double> blocks(64);
    for (double& b : blocks) b = std::exp(0.5 * rng.normal());
    GridFunction lognormal = GridFunction::zeros(d);
    for (std::size_t i = 0; i < d.n; ++i) {
        const auto cell = reference_cell(d, i);
        double s = 0.0;
        for (std::size_t b = 0; b < 64; ++b) {
            const double a = kRefLeft + static_cast<double>(b) * 0.125;
            s += blocks[b] * overlap(cell, a, a + 0.125);
        }
        lognormal[i] = s / hr;
    }
    out.emplace_back("random-lognormal", lognormal);

    GridFunction spike = GridFunction::constant(d, 1.0);
    for (std::size_t i = 0; i < d.n; ++i) spike[i] += 1000.0 * overlap(reference_cell(d, i), 0.0, 1.0 / 256) / hr;
    out.emplace_back("spike", spike);
    for (const auto& [name, w] : out) require_weight(w, name);
    return out;
}

// --------------------------------------------------------------- context ---

struct VerifyContext::Level {
    Domain domain;
    std::unique_ptr<KernelField> field;
    std::vector<GridFunction> functions;
    std::vector<std::pair<std::string, Weight>> weights;
    std::map<double, std::vector<DominationCertificate>> certificates;
    std::vector<GridFunction> maximals;
};

VerifyContext::VerifyContext(VerifyConfig cfg) : cfg_(std::move(cfg)) {
    require(cfg_.right > cfg_.left, "domain needs left < right");
    require(cfg_.n >= 2 && (cfg_.n & (cfg_.n - 1)) == 0, "N must be a power of two");
    const double length = cfg_.right - cfg_.left;
    const double t_min = cfg_.t_min > 0.0 ? cfg_.t_min : length / 512.0;
    const double t_max = cfg_.t_max > 0.0 ? cfg_.t_max : length;
    const double coarse_h = length / static_cast<double>(cfg_.n / 2);
    if (t_min < 2.0 * coarse_h) {
        throw PreconditionError("cone finer than grid: t_min = " + fmt(t_min) + " is below twice the cell width " +
                                fmt(coarse_h) + " of the coarse level N/2 = " + std::to_string(cfg_.n / 2));
    }
    require(cfg_.n <= 4096, "cone runs are capped at N = 4096");
    require(!cfg_.alphas.empty(), "at least one aperture is needed");
    for (double a : cfg_.alphas) require(a >= 1.0, "aperture must be at least 1");
    for (double p : cfg_.p_values) require(p > 0.0 && std::isfinite(p), "exponents must be positive");
    require(cfg_.drift_tolerance > 0.0, "drift tolerance must be positive");
    require(cfg_.delta > 0.0, "dilation decay delta must be positive");

    OperatorSpec op;
    if (cfg_.op == "laplacian") {
        op = OperatorSpec::laplacian();
    } else if (cfg_.op == "spectral") {
        op = OperatorSpec::spectral(SpectralMultiplier::from_name(cfg_.psi));
    } else {
        throw PreconditionError("verify supports the laplacian and spectral operators, not " + cfg_.op);
    }
    corpus_ = function_corpus(cfg_.functions, cfg_.seed);
    const TimeGrid times = TimeGrid::make(t_min, t_max, cfg_.per_octave);
    for (std::size_t n : {cfg_.n / 2, cfg_.n}) {
        auto level = std::make_unique<Level>();
        level->domain = Domain::make(cfg_.mode, cfg_.left, cfg_.right, n);
        level->field = std::make_unique<KernelField>(level->domain, op, Fluctuation::Plain, times);
        for (const auto& f : corpus_) level->functions.push_back(sample_corpus(level->domain, f));
        level->weights = verify_weight_corpus(level->domain, cfg_.seed);
        levels_.push_back(std::move(level));
    }
}

VerifyContext::~VerifyContext() = default;

const Domain& VerifyContext::domain(std::size_t level) const { return levels_.at(level)->domain; }
const KernelField& VerifyContext::field(std::size_t level) const { return *levels_.at(level)->field; }
const std::vector<GridFunction>& VerifyContext::functions(std::size_t level) const {
    return levels_.at(level)->functions;
}
const std::vector<std::pair<std::string, Weight>>& VerifyContext::weights(std::size_t level) const {
    return levels_.at(level)->weights;
}

const Weight& VerifyContext::weight(std::size_t level, const std::string& name) const {
    for (const auto& [n, w] : weights(level)) {
        if (n == name) return w;
    }
    throw PreconditionError("unknown corpus weight: " + name);
}

const std::vector<DominationCertificate>& VerifyContext::certificates(std::size_t level, double alpha) {
    Level& lv = *levels_.at(level);
    auto it = lv.certificates.find(alpha);
    if (it != lv.certificates.end()) return it->second;
    std::vector<DominationCertificate> certs(lv.functions.size());
    DominationConfig dc;
    dc.delta = cfg_.delta;
    parallel_for(certs.size(), [&](std::size_t i) {
        certs[i] = dominate(lv.functions[i], *lv.field, ConeConfig{alpha}, dc);
    });
    return lv.certificates.emplace(alpha, std::move(certs)).first->second;
}

const std::vector<GridFunction>& VerifyContext::maximals(std::size_t level) {
    Level& lv = *levels_.at(level);
    if (lv.maximals.empty()) {
        std::vector<GridFunction> out(lv.functions.size());
        parallel_for(out.size(), [&](std::size_t i) { out[i] = hl_maximal(lv.functions[i]); });
        lv.maximals = std::move(out);
    }
    return lv.maximals;
}

void VerifyContext::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) const {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, cfg_.workers), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------- suites ---

namespace {

const char* kTwoWeightPairs[][2] = {
    {"constant", "constant"}, {"two-level", "two-level"}, {"power -0.5", "power -0.5"}, {"constant", "two-level"}};

std::string pair_label(const char* const pair[2]) { return std::string("u=") + pair[0] + " v=" + pair[1]; }

LevelResult suite_bump(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const auto& fs = ctx.functions(level);
    bool low_branch = false, high_branch = false;
    for (double p : exponents(ctx, {1.5, 2.0, 3.0})) {
        if (!(p > 1.0)) {
            out.note += "p=" + fmt(p) + " skipped (needs p > 1). ";
            continue;
        }
        const double pp = p / (p - 1.0);
        const auto a = YoungFunction::log_bump(p > 2.0 ? p / 2.0 : p, 1.0);
        const auto b = YoungFunction::log_bump(pp, 1.0);
        for (const auto& pair : kTwoWeightPairs) {
            const Weight& u = ctx.weight(level, pair[0]);
            const Weight& v = ctx.weight(level, pair[1]);
            const auto bc = bump_constants(u, v, a, b, p, kThreeGrid);
            if (bc.hypothesis_violated || !std::isfinite(bc.bound)) {
                out.vacuous_cases += fs.size() * ctx.config().alphas.size();
                continue;
            }
            (p <= 2.0 ? low_branch : high_branch) = true;
            for (double alpha : ctx.config().alphas) {
                const auto& certs = ctx.certificates(level, alpha);
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    const double rhs = alpha * bc.bound * lp_norm(fs[i], p, &v);
                    const std::string label =
                        "p=" + fmt(p) + " " + pair_label(pair) + " " + join_alpha(alpha) + " " + ctx.corpus()[i].label;
                    out.add_case("strong bound", label, lp_norm(certs[i].numerator, p, &u), rhs);
                    double sparse = 0.0;
                    for (const auto& fam : certs[i].families) sparse += lp_norm(sparse_square(fs[i], fam), p, &u);
                    out.raise("sparse-side bound", ratio_of(sparse, rhs));
                }
            }
        }
    }
    if (level == 1) {
        const auto zero = conical_square(GridFunction::zeros(ctx.domain(level)), ctx.field(level),
                                         ConeConfig{ctx.config().alphas.front()});
        out.check("zero input gives 0 <= 0", zero.max_abs() == 0.0);
        const auto ps = exponents(ctx, {1.5, 2.0, 3.0});
        const bool wants_low = std::any_of(ps.begin(), ps.end(), [](double p) { return p > 1.0 && p <= 2.0; });
        const bool wants_high = std::any_of(ps.begin(), ps.end(), [](double p) { return p > 2.0; });
        out.check("log-bump hypotheses hold on the exponents below and above 2",
                  (!wants_low || low_branch) && (!wants_high || high_branch));
    }
    return out;
}

LevelResult suite_separated_weak(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    const auto& fs = ctx.functions(level);
    const double alpha0 = ctx.config().alphas.front();
    for (double p : exponents(ctx, {1.5, 3.0})) {
        if (!(p > 1.0)) {
            out.note += "p=" + fmt(p) + " skipped (needs p > 1). ";
            continue;
        }
        const double pp = p / (p - 1.0);
        const auto a = YoungFunction::log_bump(p, 1.0);
        for (const auto& pair : kTwoWeightPairs) {
            const Weight& u = ctx.weight(level, pair[0]);
            const Weight& v = ctx.weight(level, pair[1]);
            const auto bc = bump_constants(u, v, a, YoungFunction::power(pp), p, kThreeGrid);
            if (!bc.a_bar_dual.finite) {
                out.vacuous_cases += fs.size() * ctx.config().alphas.size();
                continue;
            }
            const double k = bc.separated_a * std::pow(bc.a_bar_dual.value, 1.0 / pp);
            for (double alpha : ctx.config().alphas) {
                const auto& certs = ctx.certificates(level, alpha);
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    out.add_case("weak two-weight bound",
                                 "p=" + fmt(p) + " " + pair_label(pair) + " " + join_alpha(alpha) + " " +
                                     ctx.corpus()[i].label,
                                 weak_lp_norm(certs[i].numerator, p, &u), k * lp_norm(fs[i], p, &v));
                }
            }
        }
    }

    // Endpoint estimate for the sparse square operator on every corpus weight.
    const auto& certs = ctx.certificates(level, alpha0);
    std::vector<DyadicGrid> grids;
    for (int g = 0; g < 3; ++g) grids.emplace_back(d, g);
    for (const auto& [wname, w] : ctx.weights(level)) {
        std::vector<GridFunction> mdw;
        for (const auto& grid : grids) mdw.push_back(dyadic_maximal(w, grid));
        for (std::size_t i = 0; i < fs.size(); ++i) {
            double worst = 0.0, lhs = 0.0, rhs = 0.0;
            for (int g = 0; g < 3; ++g) {
                const auto& fam = certs[i].families[static_cast<std::size_t>(g)];
                const double l = weak_lp_norm(sparse_square(fs[i], fam), 1.0, &w);
                const double r = lp_norm(fs[i], 1.0, &mdw[static_cast<std::size_t>(g)]);
                if (ratio_of(l, r) >= worst) {
                    worst = ratio_of(l, r);
                    lhs = l;
                    rhs = r;
                }
            }
            out.add_case("sparse endpoint bound", "w=" + wname + " " + ctx.corpus()[i].label, lhs, rhs);
        }
    }
    if (level != 1) return out;

    // Calderon-Zygmund sub-invariants on the standard grid.
    const DyadicGrid& grid = grids[0];
    std::size_t decompositions = 0, cz_failures = 0, nesting = 0, wo_failures = 0;
    double worst_mean = 0.0, worst_vanish = 0.0;
    std::vector<GridFunction> mdw0;
    for (const auto& [wname, w] : ctx.weights(level)) mdw0.push_back(dyadic_maximal(w, grid));
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const GridFunction af = fs[i].abs();
        const PrefixSum prefix(af.values);
        double root_avg = 0.0;
        for (const auto& r : grid.roots()) root_avg = std::max(root_avg, prefix.sum(r.cells) / r.cells.len);
        for (double scale : {0.25, 0.5}) {
            double lambda = scale * af.max_abs();
            if (lambda < root_avg) lambda = 2.0 * root_avg;
            if (lambda == 0.0) continue;
            const auto cz = cz_decompose(fs[i], lambda, grid);
            const auto rep = check_cz(fs[i], cz, grid);
            ++decompositions;
            cz_failures += !rep.ok(1e-12);
            worst_mean = std::max(worst_mean, rep.max_mean_bad);

            // Signed averages of each b_j over the family cubes that leave Omega.
            for (const auto& m : certs[i].families[0].members) {
                const CellRange& q = m.cube.cells;
                bool leaves = false;
                for (std::size_t k = 0; k < q.len && !leaves; ++k) leaves = !cz.omega[q.at(k, d.n)];
                if (!leaves) continue;
                for (std::size_t j = 0; j < cz.cubes.size(); ++j) {
                    const CellRange& c = cz.cubes[j].cells;
                    bool meets = false, inside = true;
                    for (std::size_t k = 0; k < c.len; ++k) {
                        const bool in = q.contains(c.at(k, d.n), d.n);
                        meets = meets || in;
                        inside = inside && in;
                    }
                    if (!meets) continue;
                    if (!inside) {
                        ++nesting;
                        continue;
                    }
                    double s = 0.0;
                    for (double b : cz.bad_piece(j)) s += b;
                    worst_vanish = std::max(worst_vanish, std::fabs(s) / static_cast<double>(q.len));
                }
            }

            for (std::size_t wi = 0; wi < ctx.weights(level).size(); ++wi) {
                const Weight& w = ctx.weights(level)[wi].second;
                const double lhs = measure(d, cz.omega, &w);
                double rhs = 0.0;
                for (std::size_t x = 0; x < d.n; ++x) rhs += af[x] * mdw0[wi][x];
                rhs *= d.h() / lambda;
                wo_failures += lhs > rhs * (1.0 + 1e-12);
            }
        }
    }
    out.check("Calderon-Zygmund invariants exact", cz_failures == 0,
              std::to_string(decompositions) + " decompositions, max |mean b_j| = " + fmt(worst_mean));
    out.check("sparse averages of b_j vanish off Omega", nesting == 0 && worst_vanish <= 1e-12,
              "nesting violations " + std::to_string(nesting) + ", max |<b_j>_Q| = " + fmt(worst_vanish));
    out.check("w(Omega) <= (1/lambda) int |f| M_D w", wo_failures == 0,
              std::to_string(wo_failures) + " violations over " + std::to_string(decompositions) + " x " +
                  std::to_string(ctx.weights(level).size()));
    return out;
}

LevelResult suite_fefferman_stein(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const auto& fs = ctx.functions(level);
    std::vector<GridFunction> mw;
    for (const auto& [name, w] : ctx.weights(level)) mw.push_back(hl_maximal(w));
    for (double p : exponents(ctx, {1.5, 2.0, 3.0})) {
        if (!(p > 1.0)) {
            out.note += "p=" + fmt(p) + " skipped (needs p > 1). ";
            continue;
        }
        const std::string constant = "ratio p=" + fmt(p);
        for (double alpha : ctx.config().alphas) {
            const auto& certs = ctx.certificates(level, alpha);
            for (std::size_t wi = 0; wi < ctx.weights(level).size(); ++wi) {
                const auto& [wname, w] = ctx.weights(level)[wi];
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    double rhs;
                    if (p <= 2.0) {
                        rhs = lp_norm(fs[i], p, &mw[wi]);
                    } else {
                        GridFunction g = fs[i];
                        for (std::size_t x = 0; x < g.size(); ++x) g[x] *= std::sqrt(mw[wi][x] / w[x]);
                        rhs = lp_norm(g, p, &w);
                    }
                    out.add_case(constant,
                                 "p=" + fmt(p) + " w=" + wname + " " + join_alpha(alpha) + " " + ctx.corpus()[i].label,
                                 lp_norm(certs[i].numerator, p, &w), alpha * rhs);
                }
            }
        }
    }
    return out;
}

DecayFit fit_decay(const std::string& label, const GridFunction& s, const GridFunction& m,
                   const std::vector<char>& ball) {
    DecayFit fit;
    fit.label = label;
    std::size_t inside = 0;
    for (char b : ball) inside += b != 0;
    for (int k = 0; k <= 20; ++k) fit.thresholds.push_back(1.0 + 0.25 * k);
    fit.max_ratio = pointwise_sup(s, m, &ball);
    for (double t : fit.thresholds) {
        std::size_t count = 0;
        for (std::size_t x = 0; x < s.size(); ++x) count += ball[x] && s[x] > t * m[x];
        fit.fractions.push_back(static_cast<double>(count) / static_cast<double>(inside));
    }
    fit.nonincreasing = std::is_sorted(fit.fractions.rbegin(), fit.fractions.rend());
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < fit.fractions.size(); ++k) {
        if (fit.fractions[k] > 0.0) {
            xs.push_back(fit.thresholds[k] * fit.thresholds[k]);
            ys.push_back(std::log(fit.fractions[k]));
        }
    }
    fit.points = xs.size();
    fit.below_resolution = xs.empty();
    fit.dominated = true;
    if (xs.size() < 2) return fit;

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k] / n;
        my += ys[k] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    fit.fitted = true;
    fit.c2 = -slope;
    fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    double log_c1 = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < xs.size(); ++k) log_c1 = std::max(log_c1, ys[k] + fit.c2 * xs[k]);
    fit.c1 = std::exp(log_c1);
    for (std::size_t k = 0; k < fit.fractions.size(); ++k) {
        const double t = fit.thresholds[k];
        fit.dominated = fit.dominated && fit.fractions[k] <= fit.c1 * std::exp(-fit.c2 * t * t) * (1.0 + 1e-12);
    }
    return fit;
}

std::vector<char> reference_ball(const Domain& d, double radius) {
    std::vector<char> mask(d.n, 0);
    for (std::size_t i = 0; i < d.n; ++i) mask[i] = std::fabs(to_reference(d, d.x(i))) < radius;
    return mask;
}

LevelResult suite_local_decay(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    const auto& fs = ctx.functions(level);
    const double alpha = ctx.config().alphas.front();
    const auto& certs = ctx.certificates(level, alpha);
    const auto& ms = ctx.maximals(level);
    const auto ball = reference_ball(d, 3.5);

    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < fs.size() && chosen.size() < 10; ++i) {
        if (ctx.corpus()[i].compact) chosen.push_back(i);
    }
    if (chosen.empty()) {
        out.note = "no compactly supported corpus function";
        return out;
    }
    bool monotone = true, dominated = true, positive = true;
    std::size_t below = 0;
    for (std::size_t i : chosen) {
        auto fit = fit_decay(ctx.corpus()[i].label, certs[i].numerator, ms[i], ball);
        out.raise("sup of S f / M f on B", fit.max_ratio);
        monotone = monotone && fit.nonincreasing;
        dominated = dominated && fit.dominated;
        positive = positive && (!fit.fitted || fit.c2 > 0.0);
        below += fit.below_resolution;
        out.fits.push_back(std::move(fit));
    }
    if (level == 1) {
        out.check("survival fractions nonincreasing in t", monotone);
        out.check("fractions dominated by c1 exp(-c2 t^2) with c2 > 0", dominated && positive);
        if (below == chosen.size()) {
            out.note = "decay below resolution: S f <= t M f on B for every t in [1, 6] (sup ratio " +
                       fmt(out.constants.front().second) + ")";
        }
    }

    // Local L^2 bound against M f for A_2 weights, restricted to B.
    for (const char* wname : {"constant", "two-level", "power 0.5", "power -0.5", "cr 0.5", "random-lognormal"}) {
        const Weight& w = ctx.weight(level, wname);
        const double a2 = ap_constant(w, 2.0, kAllIntervals);
        Weight wb = w;
        for (std::size_t x = 0; x < d.n; ++x) wb[x] *= ball[x] ? 1.0 : 0.0;
        for (std::size_t i : chosen) {
            out.add_case("local L2 bound over [w]_A2^(1/2)", std::string("w=") + wname + " " + ctx.corpus()[i].label,
                         lp_norm(certs[i].numerator, 2.0, &wb), std::sqrt(a2) * lp_norm(ms[i], 2.0, &wb));
        }
    }
    return out;
}

LevelResult suite_mixed_weak(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    const auto& fs = ctx.functions(level);
    const auto& ms = ctx.maximals(level);
    for (const char* uname : {"constant", "cr 0.5", "cr 0.9"}) {
        const Weight& u = ctx.weight(level, uname);
        const double a1 = a1_constant(u, kAllIntervals);
        for (const char* vname : {"constant", "power 0.5", "power -0.5"}) {
            const Weight& v = ctx.weight(level, vname);
            const Weight uv = u.times(v);
            const bool hypothesis = std::isfinite(a1) && (std::isfinite(ainfty_exp_constant(uv, kAllIntervals)) ||
                                                          std::isfinite(ainfty_exp_constant(v, kAllIntervals)));
            if (!hypothesis) {
                out.vacuous_cases += fs.size() * ctx.config().alphas.size();
                continue;
            }
            for (double alpha : ctx.config().alphas) {
                const auto& certs = ctx.certificates(level, alpha);
                for (std::size_t i = 0; i < fs.size(); ++i) {
                    GridFunction g = certs[i].numerator;
                    for (std::size_t x = 0; x < d.n; ++x) g[x] /= v[x];
                    out.add_case("mixed weak bound",
                                 std::string("u=") + uname + " v=" + vname + " " + join_alpha(alpha) + " " +
                                     ctx.corpus()[i].label,
                                 weak_lp_norm(g, 1.0, &uv), lp_norm(fs[i], 1.0, &u));
                }
            }
        }
    }

    // Control by the maximal function for A_infinity weights.
    const auto& certs = ctx.certificates(level, ctx.config().alphas.front());
    for (double p : {0.5, 1.0, 2.0}) {
        for (const auto& [wname, w] : ctx.weights(level)) {
            if (wname == "spike") continue;
            for (std::size_t i = 0; i < fs.size(); ++i) {
                out.raise("S f over M f in L^p(w), p=" + fmt(p),
                          ratio_of(lp_norm(certs[i].numerator, p, &w), lp_norm(ms[i], p, &w)));
            }
        }
    }
    if (level != 1) return out;

    // Rubio de Francia majorants, maximal and T_u variants.
    const Weight& u = ctx.weight(level, "cr 0.5");
    const Weight& v = ctx.weight(level, "power -0.5");
    std::size_t below_h = 0, a1_fail = 0, tu_fail = 0;
    double worst_a1 = 0.0;
    const std::size_t count = std::min<std::size_t>(3, fs.size());
    for (std::size_t i = 0; i < count; ++i) {
        GridFunction h = fs[i].abs();
        h = h.scaled(1.0 / h.max_abs());
        RdFConfig rc;
        rc.r = 2.0;
        const auto rm = rubio_de_francia(h, rc);
        for (std::size_t x = 0; x < d.n; ++x) below_h += !(h[x] <= rm.value[x]);
        // Strictly positive majorant: its A_1 constant is bounded by 2 ||M||.
        const double a1 = a1_constant(rm.value, kAllIntervals);
        worst_a1 = std::max(worst_a1, a1 / (2.0 * rm.operator_norm));
        a1_fail += !(a1 <= 2.0 * rm.operator_norm * (1.0 + 1e-6));

        const auto rt = rubio_de_francia_tu(h, u, v, rc);
        for (std::size_t x = 0; x < d.n; ++x) below_h += !(h[x] <= rt.value[x]);
        const auto tu = tu_operator(rt.value, u);
        for (std::size_t x = 0; x < d.n; ++x) {
            tu_fail += tu[x] > 2.0 * rt.operator_norm * (rt.value[x] + rt.last_term) * (1.0 + 1e-12);
        }
    }
    out.check("h <= R h exactly (both iterations)", below_h == 0, std::to_string(below_h) + " violations");
    out.check("[R h]_A1 <= 2 ||M|| within 1e-6", a1_fail == 0, "max [Rh]_A1 / (2 ||M||) = " + fmt(worst_a1, 9));
    out.check("T_u(R h) <= 2 K_0 (R h + omitted term)", tu_fail == 0, std::to_string(tu_fail) + " violations");
    return out;
}

struct CellSet {
    std::string label;
    std::vector<char> mask;
};

std::vector<CellSet> restricted_sets(const Domain& d, std::uint64_t seed) {
    std::vector<CellSet> sets;
    sets.push_back({"E=domain", std::vector<char>(d.n, 1)});
    std::vector<char> single(d.n, 0);
    single[d.cell_of(d.left + 5.0 * d.length() / kRefLength)] = 1;  // reference x = 1
    sets.push_back({"E=single cell", single});
    Rng rng(seed + 7);
    const std::size_t blocks = 64;
    for (int k = 0; k < 30; ++k) {
        std::vector<char> chosen(blocks, 0);
        const std::size_t count = 1 + rng.below(16);
        for (std::size_t c = 0; c < count; ++c) chosen[rng.below(blocks)] = 1;
        std::vector<char> mask(d.n, 0);
        for (std::size_t i = 0; i < d.n; ++i) mask[i] = chosen[i * blocks / d.n];
        sets.push_back({"E=blocks-" + std::to_string(k), mask});
    }
    return sets;
}

LevelResult suite_restricted_weak(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    std::vector<double> ps;
    for (double p : exponents(ctx, {3.0})) {
        if (p > 2.0) {
            ps.push_back(p);
        } else {
            out.note += "p=" + fmt(p) + " skipped (needs p > 2). ";
        }
    }
    if (ps.empty()) return out;

    const auto sets = restricted_sets(d, ctx.config().seed);
    const double alpha = ctx.config().alphas.front();
    std::vector<GridFunction> s_sets(sets.size()), m_sets(sets.size());
    ctx.parallel_for(sets.size(), [&](std::size_t k) {
        GridFunction ind = GridFunction::zeros(d);
        for (std::size_t x = 0; x < d.n; ++x) ind[x] = sets[k].mask[x] ? 1.0 : 0.0;
        s_sets[k] = conical_square(ind, ctx.field(level), ConeConfig{alpha});
        m_sets[k] = hl_maximal(ind);
    });
    const auto& certs = ctx.certificates(level, alpha);
    for (double p : ps) {
        for (const char* wname : {"constant", "two-level", "power 0.5", "power -0.5"}) {
            const Weight& w = ctx.weight(level, wname);
            const double c = apR_constant(w, p, kThreeGrid);
            for (std::size_t k = 0; k < sets.size(); ++k) {
                const double we = std::pow(measure(d, sets[k].mask, &w), 1.0 / p);
                const std::string label = "p=" + fmt(p) + " w=" + wname + " " + sets[k].label;
                out.add_case("S(1_E) over [w]^(1+p/2) w(E)^(1/p)", label, weak_lp_norm(s_sets[k], p, &w),
                             std::pow(c, 1.0 + p / 2.0) * we);
                out.raise("M(1_E) over [w] w(E)^(1/p)", ratio_of(weak_lp_norm(m_sets[k], p, &w), c * we));
            }

            // w(Q(x, 2 l(Q))) / w(E_Q) on the constructed sparse families.
            const PrefixSum pw(w.values);
            const auto nn = static_cast<long long>(d.n);
            double worst = 0.0;
            for (const auto& cert : certs) {
                for (const auto& fam : cert.families) {
                    for (const auto& m : fam.members) {
                        double we_q = 0.0;
                        for (const auto& r : m.selected) we_q += pw.sum(r);
                        const auto len = static_cast<long long>(m.cube.cells.len);
                        double wide = 0.0;
                        for (long long k = 0; k < len; ++k) {
                            const long long x = static_cast<long long>(m.cube.cells.lo) + k;
                            long long lo = x - len, hi = x + len;
                            if (!d.periodic()) {
                                lo = std::max(lo, 0LL);
                                hi = std::min(hi, nn);
                            }
                            const auto span = static_cast<std::size_t>(std::min(hi - lo, nn));
                            wide = std::max(wide, pw.sum({static_cast<std::size_t>(((lo % nn) + nn) % nn), span}));
                        }
                        worst = std::max(worst, ratio_of(wide, we_q * std::pow(c, p)));
                    }
                }
            }
            out.raise("w(Q(x,2l(Q))) over w(E_Q) [w]^p", worst);
        }
    }
    return out;
}

LevelResult suite_commutator_endpoint(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    const auto& fs = ctx.functions(level);
    const auto& ms = ctx.maximals(level);
    const double alpha = ctx.config().alphas.front();
    const auto& certs = ctx.certificates(level, alpha);
    const auto phi = YoungFunction::commutator();
    const GridFunction b =
        GridFunction::sample(d, [&](double x) { return std::log(std::max(std::fabs(to_reference(d, x)), 1.0 / 64)); });
    const auto spec = make_commutator_spec(b, kThreeGrid);
    std::vector<double> ts;
    for (int k = 0; k <= 16; ++k) ts.push_back(std::pow(10.0, -2.0 + 0.25 * k));

    std::vector<GridFunction> comm(fs.size());
    ctx.parallel_for(fs.size(), [&](std::size_t i) { comm[i] = commutator_square(fs[i], ctx.field(level), {alpha}, spec); });
    const MaximalConfig three{CubeFamily::ThreeGrid};
    std::vector<GridFunction> llogl(fs.size());
    ctx.parallel_for(fs.size(), [&](std::size_t i) { llogl[i] = orlicz_maximal(fs[i], YoungFunction::llogl(), three); });

    for (const char* wname : {"constant", "cr 0.5", "cr 0.9"}) {
        const Weight& w = ctx.weight(level, wname);
        for (std::size_t i = 0; i < fs.size(); ++i) {
            double worst = -1.0, lhs = 0.0, rhs = 0.0;
            for (double t : ts) {
                const double l = measure(d, level_set(comm[i], t), &w);
                const double r = gauge_integral(fs[i], phi, t, w);
                if (ratio_of(l, r) > worst) {
                    worst = ratio_of(l, r);
                    lhs = l;
                    rhs = r;
                }
                out.raise("M_LlogL level sets over int Phi(|f|/t) w",
                          ratio_of(measure(d, level_set(llogl[i], t), &w), r));
            }
            out.add_case("endpoint bound", std::string("w=") + wname + " " + ctx.corpus()[i].label, lhs, rhs);
        }
    }

    // Sharp maximal function of S~ f against M f, delta = 1/3.
    for (std::size_t i = 0; i < fs.size(); ++i) {
        out.raise("M#_1/3(S~ f) over M f", pointwise_sup(sharp_maximal(certs[i].smooth, 1.0 / 3.0, three), ms[i]));
    }
    // Sharp maximal function of the smoothed commutator, delta = 1/3, eps = 2/3.
    const std::size_t count = std::min<std::size_t>(10, fs.size());
    std::vector<double> sharp_ratio(count, 0.0);
    ctx.parallel_for(count, [&](std::size_t i) {
        const auto cs = commutator_square(fs[i], ctx.field(level), {alpha}, spec, true);
        const auto lhs = sharp_maximal(cs, 1.0 / 3.0, three);
        GridFunction rhs = hl_maximal(certs[i].smooth, {}, 2.0 / 3.0);
        for (std::size_t x = 0; x < d.n; ++x) rhs[x] = spec.bmo * (llogl[i][x] + rhs[x]);
        sharp_ratio[i] = pointwise_sup(lhs, rhs);
    });
    out.raise("M#_1/3(C_b S~ f) over ||b||_BMO (M_LlogL f + M_2/3(S~ f))",
              *std::max_element(sharp_ratio.begin(), sharp_ratio.end()));

    if (level == 1) {
        const auto flat = make_commutator_spec(GridFunction::constant(d, 0.7), kThreeGrid);
        const auto zero = commutator_square(fs[0], ctx.field(level), {alpha}, flat);
        out.check("constant symbol gives an identically zero commutator", zero.max_abs() == 0.0 && flat.bmo == 0.0);
        double c = 0.0;
        for (int i = -12; i <= 12; ++i) {
            for (int j = -12; j <= 12; ++j) {
                const double s = std::pow(10.0, 0.25 * i), t = std::pow(10.0, 0.25 * j);
                c = std::max(c, phi(s * t) / (phi(s) * phi(t)));
            }
        }
        out.check("Phi(st) <= Phi(s) Phi(t) on [1e-3, 1e3]^2", c <= 1.0 + 1e-12, "max ratio " + fmt(c, 17));
        out.check("symbol has finite BMO norm", std::isfinite(spec.bmo) && spec.bmo > 0.0,
                  "||b||_BMO = " + fmt(spec.bmo));
    }
    return out;
}

LevelResult suite_applications(VerifyContext& ctx, std::size_t level) {
    LevelResult out;
    const Domain& d = ctx.domain(level);
    const double lambda = ctx.config().lambda;
    if (!(lambda > 2.0)) {
        out.note = "hypothesis lambda > 2 violated";
        out.vacuous_cases = 1;
        return out;
    }
    const KernelField& plain = ctx.field(level);
    const OperatorSpec& op = plain.op();
    OperatorSpec op_psi = op, op_phi = op, op_s2 = op;
    op_psi.psi = SpectralMultiplier::gaussian_quartic();
    op_phi.psi = SpectralMultiplier::bump();
    op_s2.psi = SpectralMultiplier::gaussian_square();
    const KernelField grad(d, op, Fluctuation::Gradient, plain.times());
    const KernelField psi(d, op_psi, Fluctuation::Spectral, plain.times());
    const KernelField phi(d, op_phi, Fluctuation::Spectral, plain.times());
    const GStarConfig gc{lambda, 6};
    const auto& fs = ctx.functions(level);
    const auto& ms = ctx.maximals(level);
    const std::size_t count = std::min<std::size_t>(3, fs.size());

    struct Chain {
        GridFunction g, gs, series, gd, gsd, series_d, gpsi, gspsi, gsphi, series_psi;
    };
    std::vector<Chain> chains(count);
    ctx.parallel_for(count, [&](std::size_t i) {
        Chain& c = chains[i];
        c.g = vertical_square(fs[i], plain);
        c.gs = gstar_square(fs[i], plain, gc);
        c.series = cone_series(fs[i], plain, gc);
        c.gd = vertical_square(fs[i], grad);
        c.gsd = gstar_square(fs[i], grad, gc);
        c.series_d = cone_series(fs[i], grad, gc);
        c.gpsi = vertical_square(fs[i], psi);
        c.gspsi = gstar_square(fs[i], psi, gc);
        c.gsphi = gstar_square(fs[i], phi, gc);
        c.series_psi = cone_series(fs[i], psi, gc);
    });
    const Weight& cr = ctx.weight(level, "cr 0.5");
    const auto ball = reference_ball(d, 3.5);
    for (std::size_t i = 0; i < count; ++i) {
        const Chain& c = chains[i];
        const std::string& name = ctx.corpus()[i].label;
        out.add_case("g over g*", "plain g <= g* " + name, pointwise_sup(c.g, c.gs), 1.0);
        out.add_case("g* over cone series", "plain g* <= series " + name, pointwise_sup(c.gs, c.series), 1.0);
        out.add_case("g_D over g*", "D g_D <= g* " + name, pointwise_sup(c.gd, c.gs), 1.0);
        out.add_case("g*_D over cone series", "D g*_D <= series " + name, pointwise_sup(c.gsd, c.series_d), 1.0);
        GridFunction sum = c.gspsi;
        for (std::size_t x = 0; x < d.n; ++x) sum[x] += c.gsphi[x];
        out.add_case("g_psi over g*_phi + g*_psi", "psi g_psi <= g*_phi + g*_psi " + name,
                     pointwise_sup(c.gpsi, sum), 1.0);
        out.add_case("g*_psi over cone series", "psi g*_psi <= series " + name,
                     pointwise_sup(c.gspsi, c.series_psi), 1.0);

        // Light re-runs of the weighted estimates on g*.
        for (const char* wname : {"constant", "two-level", "spike"}) {
            const Weight& w = ctx.weight(level, wname);
            const auto mw = hl_maximal(w);
            out.raise("g* in L^2(w) over f in L^2(M w)", ratio_of(lp_norm(c.gs, 2.0, &w), lp_norm(fs[i], 2.0, &mw)));
        }
        out.raise("g* in L^(1,inf)(u) over f in L^1(u)", ratio_of(weak_lp_norm(c.gs, 1.0, &cr), lp_norm(fs[i], 1.0, &cr)));
        out.raise("sup of g* f / M f on B", pointwise_sup(c.gs, ms[i], &ball));
    }

    if (level == 1) {
        // psi(s) = s^2 exp(-s^2) is the plain fluctuation.
        const KernelField s2(d, op_s2, Fluctuation::Spectral, plain.times());
        const auto a = s2.apply_all(fs[0]);
        const auto bref = plain.apply_all(fs[0]);
        double diff = 0.0, peak = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            for (std::size_t x = 0; x < d.n; ++x) {
                diff = std::max(diff, std::fabs(a[k][x] - bref[k][x]));
                peak = std::max(peak, std::fabs(bref[k][x]));
            }
        }
        out.check("psi(s) = s^2 exp(-s^2) reproduces the plain family to 1e-10", diff <= 1e-10 * peak,
                  "max difference " + fmt(diff / peak) + " of the peak");
        std::size_t rising = 0;
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t prev = d.n + 1;
            for (int k = 0; k <= 20; ++k) {
                const double t = 1.0 + 0.25 * k;
                std::size_t n = 0;
                for (std::size_t x = 0; x < d.n; ++x) n += ball[x] && chains[i].gs[x] > t * ms[i][x];
                rising += n > prev;
                prev = n;
            }
        }
        out.check("g* survival fractions nonincreasing in t", rising == 0);
    }
    return out;
}

struct SuiteInfo {
    const char* id;
    const char* statement;
    const char* corpus;
    LevelFn fn;
};

const SuiteInfo kSuites[] = {
    {"bump", "||S_a f||_{L^p(u)} <= C a N_p ||f||_{L^p(v)} under log bumps; also the sparse-side bound",
     "corpus functions x 4 two-weight pairs x p in {1.5, 2, 3}", suite_bump},
    {"separated-weak",
     "||S_a f||_{L^{p,inf}(u)} <= C [u,v]_{A,p'} [conj A]_{B_p'}^(1/p') ||f||_{L^p(v)}; sparse endpoint "
     "||A_S f||_{L^{1,inf}(w)} <= C ||f||_{L^1(M_D w)}",
     "corpus functions x 4 two-weight pairs x p in {1.5, 3}; 8 weights for the endpoint", suite_separated_weak},
    {"fefferman-stein", "||S_a f||_{L^p(w)} <= C a ||f||_{L^p(Mw)} (p <= 2), C a ||f (Mw/w)^(1/2)||_{L^p(w)} (p > 2)",
     "corpus functions x 8 weights x p in {1.5, 2, 3}", suite_fefferman_stein},
    {"local-decay", "|{x in B : S_a f > t M f}| <= c1 exp(-c2 t^2) |B|",
     "10 compactly supported corpus functions, B = middle 7/8 of the domain, t in [1, 6]", suite_local_decay},
    {"mixed-weak", "||S_a f / v||_{L^{1,inf}(uv)} <= C ||f||_{L^1(u)}",
     "corpus functions x u in {constant, cr 0.5, cr 0.9} x v in {constant, power 0.5, power -0.5}",
     suite_mixed_weak},
    {"restricted-weak", "||S_a 1_E||_{L^{p,inf}(w)} <= C [w]_{A_p^R}^(1+p/2) w(E)^(1/p)",
     "32 cell-union sets x 4 weights, p = 3", suite_restricted_weak},
    {"commutator-endpoint", "w({C_b(S_a) f > t}) <= C int Phi(|f|/t) w dx, Phi(t) = t (1 + log+ t)",
     "corpus functions x A_1 weights {constant, cr 0.5, cr 0.9}, b = truncated log, t in [1e-2, 1e2]",
     suite_commutator_endpoint},
    {"applications", "g <= C g*, g* <= C sum_k 2^(-k lambda/2) S_{2^k} for the plain, gradient and psi families",
     "first 3 corpus functions, lambda = 3", suite_applications},
};

const SuiteInfo& find_suite(const std::string& id) {
    for (const auto& s : kSuites) {
        if (id == s.id) return s;
    }
    throw PreconditionError("unknown suite: " + id);
}

double drift_of(double coarse, double fine) {
    if (coarse == fine) return 0.0;
    if (coarse == 0.0 || !std::isfinite(coarse) || !std::isfinite(fine)) return std::numeric_limits<double>::infinity();
    return std::fabs(fine - coarse) / coarse;
}

SuiteReport assemble(const SuiteInfo& info, const VerifyContext& ctx, LevelResult coarse, LevelResult fine) {
    SuiteReport r;
    r.id = info.id;
    r.statement = info.statement;
    r.corpus = info.corpus;
    r.n_coarse = ctx.domain(0).n;
    r.n_fine = ctx.domain(1).n;
    r.cases = std::move(fine.cases);
    r.fits = std::move(fine.fits);
    r.checks = std::move(fine.checks);
    r.note = fine.note;
    const double tol = ctx.config().drift_tolerance;
    for (const auto& [name, value] : fine.constants) {
        MeasuredConstant c;
        c.name = name;
        c.fine = value;
        c.coarse = std::numeric_limits<double>::quiet_NaN();
        for (const auto& [n2, v2] : coarse.constants) {
            if (n2 == name) c.coarse = v2;
        }
        c.drift = drift_of(c.coarse, c.fine);
        r.constants.push_back(c);
        r.checks.push_back({name + ": finite", std::isfinite(c.fine) && std::isfinite(c.coarse),
                            "N=" + std::to_string(r.n_coarse) + ": " + fmt(c.coarse) + ", N=" +
                                std::to_string(r.n_fine) + ": " + fmt(c.fine)});
        r.checks.push_back({name + ": drift <= " + fmt(tol), c.drift <= tol, "drift " + fmt(c.drift, 4)});
        r.drift = std::max(r.drift, c.drift);
    }
    if (!r.constants.empty()) r.sup_ratio = r.constants.front().fine;
    r.vacuous = fine.live_cases == 0 && fine.vacuous_cases > 0;
    if (r.vacuous && r.note.empty()) r.note = "hypotheses fail on every case";
    r.passed = std::all_of(r.checks.begin(), r.checks.end(), [](const SuiteCheck& c) { return c.passed; });
    return r;
}

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

double read_number(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        require(s == "inf" || s == "-inf", "malformed number in report: " + s);
        return s == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}

}  // namespace

// --------------------------------------------------------------- reports ---

DecayFit DecayFit::from_json(const nlohmann::json& j) {
    DecayFit f;
    f.label = j.at("label").get<std::string>();
    f.thresholds = j.at("thresholds").get<std::vector<double>>();
    f.fractions = j.at("fractions").get<std::vector<double>>();
    f.max_ratio = read_number(j.at("max_ratio"));
    f.points = j.at("points").get<std::size_t>();
    f.below_resolution = j.at("below_resolution").get<bool>();
    f.fitted = j.at("fitted").get<bool>();
    f.c1 = read_number(j.at("c1"));
    f.c2 = read_number(j.at("c2"));
    f.r2 = read_number(j.at("r2"));
    f.dominated = j.at("dominated").get<bool>();
    f.nonincreasing = j.at("nonincreasing").get<bool>();
    return f;
}

SuiteReport SuiteReport::from_json(const nlohmann::json& j) {
    SuiteReport r;
    r.id = j.at("id").get<std::string>();
    r.statement = j.at("statement").get<std::string>();
    r.corpus = j.at("corpus").get<std::string>();
    r.n_coarse = j.at("n_coarse").get<std::size_t>();
    r.n_fine = j.at("n_fine").get<std::size_t>();
    r.passed = j.at("passed").get<bool>();
    r.vacuous = j.at("vacuous").get<bool>();
    r.sup_ratio = read_number(j.at("sup_ratio"));
    r.drift = read_number(j.at("drift"));
    r.note = j.value("note", "");
    for (const auto& c : j.at("constants")) {
        r.constants.push_back({c.at("name").get<std::string>(), read_number(c.at("coarse")), read_number(c.at("fine")),
                               read_number(c.at("drift"))});
    }
    for (const auto& c : j.at("checks")) {
        r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
    }
    for (const auto& c : j.at("cases")) {
        r.cases.push_back({c.at("label").get<std::string>(), read_number(c.at("lhs")), read_number(c.at("rhs")),
                           read_number(c.at("ratio"))});
    }
    if (j.contains("fits")) {
        for (const auto& f : j.at("fits")) r.fits.push_back(DecayFit::from_json(f));
    }
    if (j.contains("runtime_seconds")) r.runtime = j.at("runtime_seconds").get<double>();
    return r;
}

nlohmann::json DecayFit::to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["thresholds"] = thresholds;
    j["fractions"] = fractions;
    j["max_ratio"] = number(max_ratio);
    j["points"] = points;
    j["below_resolution"] = below_resolution;
    j["fitted"] = fitted;
    j["c1"] = number(c1);
    j["c2"] = number(c2);
    j["r2"] = number(r2);
    j["dominated"] = dominated;
    j["nonincreasing"] = nonincreasing;
    return j;
}

nlohmann::json SuiteReport::to_json(bool with_runtime) const {
    nlohmann::json j;
    j["id"] = id;
    j["statement"] = statement;
    j["corpus"] = corpus;
    j["n_coarse"] = n_coarse;
    j["n_fine"] = n_fine;
    j["passed"] = passed;
    j["vacuous"] = vacuous;
    j["sup_ratio"] = number(sup_ratio);
    j["drift"] = number(drift);
    if (!note.empty()) j["note"] = note;
    auto& cs = j["constants"] = nlohmann::json::array();
    for (const auto& c : constants) {
        cs.push_back({{"name", c.name}, {"coarse", number(c.coarse)}, {"fine", number(c.fine)}, {"drift", number(c.drift)}});
    }
    auto& ch = j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) ch.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    auto& ca = j["cases"] = nlohmann::json::array();
    for (const auto& c : cases) {
        ca.push_back({{"label", c.label}, {"lhs", number(c.lhs)}, {"rhs", number(c.rhs)}, {"ratio", number(c.ratio)}});
    }
    if (!fits.empty()) {
        auto& fj = j["fits"] = nlohmann::json::array();
        for (const auto& f : fits) fj.push_back(f.to_json());
    }
    if (with_runtime) j["runtime_seconds"] = runtime;
    return j;
}

std::string SuiteReport::to_text(bool with_runtime) const {
    std::ostringstream out;
    char line[512];
    out << "suite " << id << ": " << (passed ? "PASS" : "FAIL") << (vacuous ? " (vacuous)" : "") << "\n";
    out << "  statement: " << statement << "\n";
    out << "  corpus:    " << corpus << "\n";
    out << "  levels:    N=" << n_coarse << " and N=" << n_fine << "\n";
    if (!note.empty()) out << "  note:      " << note << "\n";
    if (with_runtime) out << "  runtime:   " << fmt(runtime, 4) << " s\n";
    std::size_t width = 8;
    for (const auto& c : constants) width = std::max(width, c.name.size());
    out << "  constants:\n";
    std::snprintf(line, sizeof line, "    %-*s %14s %14s %10s\n", static_cast<int>(width), "name", "coarse", "fine",
                  "drift");
    out << line;
    for (const auto& c : constants) {
        std::snprintf(line, sizeof line, "    %-*s %14.6g %14.6g %10.4f\n", static_cast<int>(width), c.name.c_str(),
                      c.coarse, c.fine, c.drift);
        out << line;
    }
    out << "  checks:\n";
    for (const auto& c : checks) {
        out << "    [" << (c.passed ? "ok" : "FAILED") << "] " << c.name;
        if (!c.detail.empty()) out << " (" << c.detail << ")";
        out << "\n";
    }
    if (!fits.empty()) {
        out << "  decay fits:\n";
        for (const auto& f : fits) {
            std::snprintf(line, sizeof line, "    %-14s max ratio %8.4f  points %2zu  c1 %10.4g  c2 %10.4g  R^2 %6.3f%s\n",
                          f.label.c_str(), f.max_ratio, f.points, f.c1, f.c2, f.r2,
                          f.below_resolution ? "  (below resolution)" : "");
            out << line;
        }
    }
    std::size_t lw = 5;
    for (const auto& c : cases) lw = std::max(lw, c.label.size());
    out << "  cases (N=" << n_fine << "):\n";
    std::snprintf(line, sizeof line, "    %-*s %14s %14s %12s\n", static_cast<int>(lw), "label", "lhs", "rhs", "ratio");
    out << line;
    for (const auto& c : cases) {
        std::snprintf(line, sizeof line, "    %-*s %14.6g %14.6g %12.6g\n", static_cast<int>(lw), c.label.c_str(), c.lhs,
                      c.rhs, c.ratio);
        out << line;
    }
    return out.str();
}

std::vector<std::string> suite_names() {
    std::vector<std::string> out;
    for (const auto& s : kSuites) out.emplace_back(s.id);
    return out;
}

std::string suite_statement(const std::string& id) { return find_suite(id).statement; }

SuiteReport run_suite(VerifyContext& ctx, const std::string& id) {
    const SuiteInfo& info = find_suite(id);
    const auto start = std::chrono::steady_clock::now();
    LevelResult coarse = info.fn(ctx, 0);
    LevelResult fine = info.fn(ctx, 1);
    SuiteReport r = assemble(info, ctx, std::move(coarse), std::move(fine));
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<SuiteReport> run_all(VerifyContext& ctx) {
    std::vector<SuiteReport> out;
    for (const auto& name : suite_names()) out.push_back(run_suite(ctx, name));
    return out;
}

nlohmann::json reports_to_json(const std::vector<SuiteReport>& reports, bool with_runtime) {
    nlohmann::json j;
    bool all = true;
    auto& arr = j["suites"] = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(r.to_json(with_runtime));
        all = all && r.passed;
    }
    j["passed"] = all;
    return j;
}

std::vector<SuiteReport> reports_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("suites"), "report JSON has no 'suites' array");
    std::vector<SuiteReport> out;
    for (const auto& s : j.at("suites")) out.push_back(SuiteReport::from_json(s));
    return out;
}

std::string reports_to_text(const std::vector<SuiteReport>& reports, bool with_runtime) {
    std::string out;
    for (const auto& r : reports) out += r.to_text(with_runtime) + "\n";
    std::size_t passed = 0;
    for (const auto& r : reports) passed += r.passed;
    out += "summary: " + std::to_string(passed) + "/" + std::to_string(reports.size()) + " suites passed\n";
    return out;
}

}  // namespace conelab
