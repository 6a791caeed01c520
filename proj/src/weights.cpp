#include "conelab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conelab/error.hpp"
#include "conelab/random.hpp"

namespace conelab {

namespace {

// Sparse-table range extremum over a cell array; queries wrap on the torus.
class RangeExtremum {
public:
    RangeExtremum(const std::vector<double>& v, bool want_max) : want_max_(want_max) {
        const std::size_t n = v.size();
        table_.push_back(v);
        for (std::size_t span = 2; span <= n; span *= 2) {
            const auto& prev = table_.back();
            std::vector<double> next(n - span + 1);
            for (std::size_t i = 0; i + span <= n; ++i) next[i] = pick(prev[i], prev[i + span / 2]);
            table_.push_back(std::move(next));
        }
    }

    double query(const CellRange& q) const {
        const std::size_t n = table_[0].size();
        if (q.lo + q.len <= n) return linear(q.lo, q.len);
        const std::size_t first = n - q.lo;
        return pick(linear(q.lo, first), linear(0, q.len - first));
    }

private:
    double pick(double a, double b) const { return want_max_ ? std::max(a, b) : std::min(a, b); }
    double linear(std::size_t lo, std::size_t len) const {
        std::size_t level = 0;
        while ((std::size_t{2} << level) <= len) ++level;
        const std::size_t span = std::size_t{1} << level;
        return pick(table_[level][lo], table_[level][lo + len - span]);
    }

    bool want_max_;
    std::vector<std::vector<double>> table_;
};

std::vector<double> cells_of(const std::vector<double>& v, const CellRange& q) {
    std::vector<double> out(q.len);
    for (std::size_t k = 0; k < q.len; ++k) out[k] = v[q.at(k, v.size())];
    return out;
}

std::vector<double> mapped(const Weight& w, double (*fn)(double, double), double arg) {
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = fn(w[i], arg);
    return out;
}

double power_of(double x, double r) { return std::pow(x, r); }

// Sum over cells of the non-wrapping interval maximal function of v.
double local_maximal_sum(const std::vector<double>& v) {
    const std::size_t len = v.size();
    std::vector<double> best(len, 0.0);
    for (std::size_t a = 0; a < len; ++a) {
        std::vector<double> avg(len - a);
        double s = 0.0;
        for (std::size_t l = 1; l <= len - a; ++l) {
            s += v[a + l - 1];
            avg[l - 1] = l == 1 ? v[a] : s / static_cast<double>(l);
        }
        double run = 0.0;
        for (std::size_t l = len - a; l >= 1; --l) {
            run = std::max(run, avg[l - 1]);
            best[a + l - 1] = std::max(best[a + l - 1], run);
        }
    }
    double total = 0.0;
    for (double x : best) total += x;
    return total;
}

double sup_norm(const GridFunction& g) {
    double m = 0.0;
    for (double x : g.values) m = std::max(m, std::fabs(x));
    return m;
}

void require_nonnegative(const GridFunction& h) {
    for (double x : h.values) require(x >= 0.0 && std::isfinite(x), "Rubio de Francia input must be nonnegative");
}

// Indicators of the dyadic cubes of grid 0 that contain the central cell.
std::vector<GridFunction> central_indicators(const Domain& d) {
    std::vector<GridFunction> out;
    const std::size_t centre = d.n / 2;
    for (std::size_t side = 1; side <= d.n; side *= 2) {
        const std::size_t lo = centre / side * side;
        GridFunction g = GridFunction::zeros(d);
        for (std::size_t i = lo; i < lo + side && i < d.n; ++i) g[i] = 1.0;
        out.push_back(std::move(g));
    }
    return out;
}

constexpr int kTestIterates = 8;

}  // namespace

void for_each_scanned_cube(const Domain& d, const CubeScan& scan, const std::function<void(const CellRange&)>& visit) {
    const std::size_t cap = scan.max_cells == 0 ? d.n : scan.max_cells;
    for_each_cube(d, scan.family, [&](const CellRange& q) {
        if (q.len <= cap) visit(q);
    });
}

double ap_constant(const Weight& w, double p, const CubeScan& scan) {
    require(p > 1.0, "A_p needs p > 1");
    require_weight(w);
    const PrefixSum sw(w.values);
    const PrefixSum sd(mapped(w, power_of, 1.0 / (1.0 - p)));
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        const double len = static_cast<double>(q.len);
        best = std::max(best, sw.sum(q) / len * std::pow(sd.sum(q) / len, p - 1.0));
    });
    return best;
}

double a1_constant(const Weight& w, const CubeScan& scan) {
    require_weight(w);
    const PrefixSum sw(w.values);
    const RangeExtremum lows(w.values, false);
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        best = std::max(best, sw.sum(q) / static_cast<double>(q.len) / lows.query(q));
    });
    return best;
}

double rh_infinity_constant(const Weight& w, const CubeScan& scan) {
    require_weight(w);
    const PrefixSum sw(w.values);
    const RangeExtremum highs(w.values, true);
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        best = std::max(best, highs.query(q) / (sw.sum(q) / static_cast<double>(q.len)));
    });
    return best;
}

double ainfty_hp_constant(const Weight& w, const CubeScan& scan) {
    require_weight(w);
    const PrefixSum sw(w.values);
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        double integral_m = 0.0;
        if (w.domain.periodic() && q.len == w.size()) {
            // The whole torus: intervals may wrap, so use the full maximal function.
            for (double x : hl_maximal(w).values) integral_m += x;
        } else {
            // Averages of w 1_Q over intervals leaving Q only lose mass, so M(w 1_Q) on Q is local.
            integral_m = local_maximal_sum(cells_of(w.values, q));
        }
        best = std::max(best, integral_m / sw.sum(q));
    });
    return best;
}

double ainfty_exp_constant(const Weight& w, const CubeScan& scan) {
    require_weight(w);
    const PrefixSum sw(w.values);
    std::vector<double> logs(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) logs[i] = std::log(w[i]);
    const PrefixSum sl(logs);
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        const double len = static_cast<double>(q.len);
        best = std::max(best, sw.sum(q) / len * std::exp(-sl.sum(q) / len));
    });
    return best;
}

double apR_constant(const Weight& w, double p, const CubeScan& scan) {
    require(p >= 1.0, "A_p^R needs p >= 1");
    require_weight(w);
    double best = 0.0;
    for_each_scanned_cube(w.domain, scan, [&](const CellRange& q) {
        // For a fixed |E| = k cells, w(E) is smallest on the k lightest cells.
        auto cells = cells_of(w.values, q);
        std::sort(cells.begin(), cells.end());
        double total = 0.0;
        for (double x : cells) total += x;
        double light = 0.0;
        const double len = static_cast<double>(q.len);
        for (std::size_t k = 1; k <= q.len; ++k) {
            light += cells[k - 1];
            const double ratio = k == q.len ? 1.0 : total / light;
            best = std::max(best, static_cast<double>(k) / len * std::pow(ratio, 1.0 / p));
        }
    });
    return best;
}

WeightConstants weight_constants(const Weight& w, double p, const CubeScan& scan) {
    WeightConstants c;
    c.p = p;
    c.scan = scan;
    c.ap = ap_constant(w, p, scan);
    c.a1 = a1_constant(w, scan);
    c.ainfty_hp = ainfty_hp_constant(w, scan);
    c.ainfty_exp = ainfty_exp_constant(w, scan);
    c.apR = apR_constant(w, p, scan);
    c.rh_infinity = rh_infinity_constant(w, scan);
    return c;
}

BumpConstants bump_constants(const Weight& u, const Weight& v, const YoungFunction& a, const YoungFunction& b,
                             double p, const CubeScan& scan) {
    require(p > 1.0, "bump constants need p > 1");
    require_weight(u, "u");
    require_weight(v, "v");
    require(u.domain == v.domain, "u and v live on different domains");
    const double pp = p / (p - 1.0);
    const auto u_root = mapped(u, power_of, 1.0 / p);
    const auto u_root2 = mapped(u, power_of, 2.0 / p);
    const auto v_root = mapped(v, power_of, -1.0 / p);
    const PrefixSum su(u.values);
    const PrefixSum sv(mapped(v, power_of, 1.0 - pp));

    BumpConstants out;
    out.p = p;
    for_each_scanned_cube(u.domain, scan, [&](const CellRange& q) {
        const double len = static_cast<double>(q.len);
        const double a_u = luxemburg_solve(cells_of(u_root, q), a).norm;
        const double b_v = luxemburg_solve(cells_of(v_root, q), b).norm;
        const double p_u = std::pow(su.sum(q) / len, 1.0 / p);
        const double pp_v = std::pow(sv.sum(q) / len, 1.0 / pp);
        out.double_bump = std::max(out.double_bump, a_u * b_v);
        out.separated_a = std::max(out.separated_a, a_u * pp_v);
        out.separated_b = std::max(out.separated_b, p_u * b_v);
        out.two_weight_ap = std::max(out.two_weight_ap, p_u * pp_v);
        if (p > 2.0) {
            const double a_u2 = luxemburg_solve(cells_of(u_root2, q), a).norm;
            out.split_norm = std::max(out.split_norm, std::sqrt(a_u2) * b_v);
        }
    });
    if (p <= 2.0) out.split_norm = out.separated_b;

    auto bp_or_divergent = [](const YoungFunction& phi, double exponent) {
        try {
            return bp_constant(phi.complementary(), exponent);
        } catch (const NumericalError&) {
            return BpResult{};
        } catch (const PreconditionError&) {
            return BpResult{};
        }
    };
    out.a_bar_dual = bp_or_divergent(a, pp);
    out.b_bar = bp_or_divergent(b, p);
    if (p > 2.0) out.a_bar_half = bp_or_divergent(a, (p / 2.0) / (p / 2.0 - 1.0));

    out.hypothesis_violated = !out.b_bar.finite || (p > 2.0 && !out.a_bar_half.finite);
    if (out.hypothesis_violated) {
        out.bound = std::numeric_limits<double>::infinity();
    } else if (p <= 2.0) {
        out.bound = out.split_norm * std::pow(out.b_bar.value, 1.0 / p);
    } else {
        out.bound = out.split_norm * std::pow(out.a_bar_half.value, 0.5 - 1.0 / p) * std::pow(out.b_bar.value, 1.0 / p);
    }
    return out;
}

GridFunction tu_operator(const GridFunction& g, const Weight& u, const MaximalConfig& cfg) {
    require(g.domain == u.domain, "T_u input and u live on different domains");
    auto m = hl_maximal(g.times(u), cfg);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] /= u[i];
    return m;
}

double measure_maximal_norm(const GridFunction& h, double r, const MaximalConfig& cfg) {
    require(r > 1.0, "Rubio de Francia needs r > 1");
    const double rp = r / (r - 1.0);
    double best = 1.0;
    auto probe = [&](const GridFunction& g) {
        const double den = lp_norm(g, rp);
        if (den <= 0.0) return GridFunction();
        auto mg = hl_maximal(g, cfg);
        best = std::max(best, lp_norm(mg, rp) / den);
        return mg.scaled(1.0 / den);
    };
    GridFunction g = h.abs();
    for (int j = 0; j < kTestIterates && sup_norm(g) > 0.0; ++j) g = probe(g);
    for (const auto& ind : central_indicators(h.domain)) probe(ind);
    return best;
}

double measure_tu_norm(const GridFunction& h, const Weight& u, const Weight& v, double r, const MaximalConfig& cfg) {
    require(r > 1.0, "Rubio de Francia needs r > 1");
    require_weight(u, "u");
    require_weight(v, "v");
    const double rp = r / (r - 1.0);
    const GridFunction uv = u.times(v);
    double best = 0.0;
    auto probe = [&](const GridFunction& g) {
        const double den = lorentz_p1_norm(g, rp, &uv);
        if (den <= 0.0) return GridFunction();
        auto tg = tu_operator(g, u, cfg);
        best = std::max(best, lorentz_p1_norm(tg, rp, &uv) / den);
        return tg.scaled(1.0 / den);
    };
    GridFunction g = h.abs();
    for (int j = 0; j < kTestIterates && sup_norm(g) > 0.0; ++j) g = probe(g);
    for (const auto& ind : central_indicators(h.domain)) probe(ind);
    return 1.1 * best;
}

namespace {

// Shared series driver; step applies the operator, size is the norm the majorant is calibrated in.
RdFResult run_series(const GridFunction& h, double majorant, int k_max,
                     const std::function<GridFunction(const GridFunction&)>& step,
                     const std::function<double(const GridFunction&)>& size) {
    require(majorant > 0.0, "operator norm must be positive");
    require(k_max >= 1, "k_max must be at least 1");
    RdFResult out;
    out.operator_norm = majorant;
    out.value = h;
    out.terms = 1;
    if (sup_norm(h) == 0.0) return out;
    const double scale = 1.0 / (2.0 * majorant);
    GridFunction term = h;
    double prev = size(term);
    for (int k = 1; k <= k_max + 1; ++k) {
        term = step(term).scaled(scale);
        const double now = size(term);
        const double ratio = prev > 0.0 ? now / prev : 0.0;
        if (k > k_max / 2) out.decay = std::max(out.decay, ratio);
        prev = now;
        if (k == k_max + 1) {
            out.last_term = sup_norm(term);
            break;
        }
        for (std::size_t i = 0; i < term.size(); ++i) out.value[i] += term[i];
        ++out.terms;
    }
    if (out.decay >= 1.0) throw NumericalError("majorant underestimated: series terms do not decay");
    out.tail_bound = out.last_term / (1.0 - out.decay);
    return out;
}

}  // namespace

RdFResult rubio_de_francia(const GridFunction& h, const RdFConfig& cfg) {
    require_nonnegative(h);
    const double rp = cfg.r / (cfg.r - 1.0);
    const double norm = cfg.operator_norm > 0.0 ? cfg.operator_norm : measure_maximal_norm(h, cfg.r, cfg.maximal);
    return run_series(
        h, norm, cfg.k_max, [&](const GridFunction& g) { return hl_maximal(g, cfg.maximal); },
        [&](const GridFunction& g) { return lp_norm(g, rp); });
}

RdFResult rubio_de_francia_tu(const GridFunction& h, const Weight& u, const Weight& v, const RdFConfig& cfg) {
    require_nonnegative(h);
    require_weight(u, "u");
    require_weight(v, "v");
    const double rp = cfg.r / (cfg.r - 1.0);
    const GridFunction uv = u.times(v);
    const double k0 = cfg.operator_norm > 0.0 ? cfg.operator_norm : measure_tu_norm(h, u, v, cfg.r, cfg.maximal);
    return run_series(
        h, k0, cfg.k_max, [&](const GridFunction& g) { return tu_operator(g, u, cfg.maximal); },
        [&](const GridFunction& g) { return lorentz_p1_norm(g, rp, &uv); });
}

GeneratedWeight coifman_rochberg_generate(const GridFunction& sigma, double delta, const YoungFunction& phi,
                                          const CubeScan& scan) {
    require(delta > 0.0 && delta < 1.0, "Coifman-Rochberg exponent must lie in (0,1)");
    require(sup_norm(sigma) > 0.0, "sigma vanishes identically");
    GeneratedWeight out;
    out.weight = orlicz_maximal(sigma, phi).pow(delta);
    out.constant = a1_constant(out.weight, scan);
    return out;
}

GeneratedWeight coifman_rochberg_reverse(const GridFunction& sigma, double lambda, const YoungFunction& phi,
                                         const CubeScan& scan) {
    require(lambda > 0.0, "reverse Coifman-Rochberg exponent must be positive");
    require(sup_norm(sigma) > 0.0, "sigma vanishes identically");
    GeneratedWeight out;
    out.weight = orlicz_maximal(sigma, phi);
    for (double& x : out.weight.values) x = std::pow(x, -lambda);
    out.constant = rh_infinity_constant(out.weight, scan);
    return out;
}

Weight make_weight(const Domain& d, const std::string& spec) {
    std::istringstream in(spec);
    std::string name;
    in >> name;
    std::vector<double> args;
    for (double x; in >> x;) args.push_back(x);
    require(in.eof(), "weight spec has a non-numeric argument: " + spec);
    auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };

    Weight w = GridFunction::constant(d, 1.0);
    if (name == "constant") {
        w = GridFunction::constant(d, arg(0, 1.0));
    } else if (name == "two-level") {
        const double mid = 0.5 * (d.left + d.right);
        for (std::size_t i = 0; i < d.n; ++i) w[i] = d.x(i) < mid ? arg(0, 1.0) : arg(1, 2.0);
    } else if (name == "power") {
        require(!args.empty(), "power weight needs an exponent");
        for (std::size_t i = 0; i < d.n; ++i) {
            require(d.x(i) != 0.0, "power weight sampled at the origin");
            w[i] = std::pow(std::fabs(d.x(i)), args[0]);
        }
    } else if (name == "cr") {
        // Point mass surrogate at three tenths of the domain.
        GridFunction sigma = GridFunction::zeros(d);
        sigma[d.cell_of(d.left + 0.3 * d.length())] = 1.0;
        w = coifman_rochberg_generate(sigma, arg(0, 0.5), YoungFunction::power(1.0), CubeScan{CubeFamily::Dyadic, 0})
                .weight;
    } else if (name == "random-lognormal") {
        Rng rng(static_cast<std::uint64_t>(arg(0, 42.0)));
        const double spread = arg(1, 0.5);
        for (double& x : w.values) x = std::exp(spread * rng.normal());
    } else if (name == "spike") {
        w[d.cell_of(0.5 * (d.left + d.right))] = arg(0, 1000.0);
    } else {
        throw PreconditionError("unknown weight generator: " + name);
    }
    require_weight(w, spec);
    return w;
}

std::vector<std::pair<std::string, Weight>> default_weight_corpus(const Domain& d, std::uint64_t seed) {
    const std::vector<std::string> specs = {
        "constant", "two-level", "power 0.5", "power -0.5", "cr 0.5", "cr 0.9",
        "random-lognormal " + std::to_string(seed), "spike"};
    std::vector<std::pair<std::string, Weight>> out;
    for (const auto& s : specs) out.emplace_back(s, make_weight(d, s));
    return out;
}

}  // namespace conelab
