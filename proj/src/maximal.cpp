#include "conelab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conelab/error.hpp"

namespace conelab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t effective_cap(const Domain& d, std::size_t cap) { return cap == 0 ? d.n : std::min(cap, d.n); }

std::vector<double> powered_abs(const GridFunction& f, double r) {
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = r == 1.0 ? std::fabs(f[i]) : std::pow(std::fabs(f[i]), r);
    return v;
}

double root_of(double mean, double r) { return r == 1.0 ? mean : std::pow(mean, 1.0 / r); }

std::vector<double> cells_of(const std::vector<double>& v, const CellRange& q) {
    std::vector<double> out(q.len);
    for (std::size_t k = 0; k < q.len; ++k) out[k] = v[q.at(k, v.size())];
    return out;
}

// fint |g - median(g)|; the median minimizes the L1 deviation.
double mean_abs_deviation(std::vector<double> g) {
    std::sort(g.begin(), g.end());
    const double m = g[(g.size() - 1) / 2];
    double s = 0.0;
    for (double x : g) s += std::fabs(x - m);
    return s / static_cast<double>(g.size());
}

}  // namespace

std::vector<double> sup_over_intervals(const Domain& d, std::size_t max_cells, const IntervalRowFn& row,
                                       const std::function<double(const CellRange&)>& whole) {
    const std::size_t n = d.n;
    const std::size_t cap = effective_cap(d, max_cells);
    std::vector<double> out(n, kNegInf);
    std::vector<double> vals(n);
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t max_len = d.periodic() ? std::min(cap, n - 1) : std::min(cap, n - a);
        if (max_len == 0) continue;
        row(a, max_len, vals);
        // Every interval starting at a with length >= len contains cell a + len - 1.
        double best = kNegInf;
        for (std::size_t len = max_len; len >= 1; --len) {
            best = std::max(best, vals[len - 1]);
            const std::size_t x = (a + len - 1) % n;
            out[x] = std::max(out[x], best);
        }
    }
    if (d.periodic() && cap == n) {
        const double v = whole(CellRange{0, n});
        for (double& x : out) x = std::max(x, v);
    }
    return out;
}

std::vector<double> sup_over_family(const Domain& d, const MaximalConfig& cfg,
                                    const std::function<double(const CellRange&)>& value) {
    const std::size_t n = d.n;
    if (cfg.family == CubeFamily::AllIntervals && cfg.centered) {
        std::vector<double> out(n, kNegInf);
        for (std::size_t x = 0; x < n; ++x) {
            // On the line clipped radii keep growing until the interval is the whole domain.
            for (std::size_t r = 0; cfg.max_cells == 0 || 2 * r + 1 <= cfg.max_cells; ++r) {
                CellRange q;
                if (d.periodic()) {
                    if (2 * r + 1 >= n) {
                        q = CellRange{0, n};
                    } else {
                        q = CellRange{(x + n - r % n) % n, 2 * r + 1};
                    }
                } else {
                    const std::size_t lo = x >= r ? x - r : 0;
                    const std::size_t hi = std::min(n, x + r + 1);
                    q = CellRange{lo, hi - lo};
                }
                out[x] = std::max(out[x], value(q));
                if (q.len == n) break;
            }
        }
        return out;
    }
    if (cfg.family == CubeFamily::AllIntervals) {
        return sup_over_intervals(
            d, cfg.max_cells,
            [&](std::size_t a, std::size_t max_len, std::vector<double>& vals) {
                for (std::size_t len = 1; len <= max_len; ++len) vals[len - 1] = value(CellRange{a, len});
            },
            value);
    }
    std::vector<double> out(n, kNegInf);
    const std::size_t cap = effective_cap(d, cfg.max_cells);
    for_each_cube(d, cfg.family, [&](const CellRange& q) {
        if (q.len > cap) return;
        const double v = value(q);
        for (std::size_t k = 0; k < q.len; ++k) {
            const std::size_t i = q.at(k, n);
            out[i] = std::max(out[i], v);
        }
    });
    return out;
}

GridFunction hl_maximal(const GridFunction& f, const MaximalConfig& cfg, double exponent) {
    require(exponent > 0.0, "maximal exponent must be positive");
    const auto g = powered_abs(f, exponent);
    const PrefixSum ps(g);
    // Single cells read |f| directly so that Mf >= |f| holds without rounding.
    auto value = [&](const CellRange& q) {
        return q.len == 1 ? std::fabs(f[q.lo]) : root_of(ps.sum(q) / static_cast<double>(q.len), exponent);
    };
    std::vector<double> out;
    if (cfg.family == CubeFamily::AllIntervals && !cfg.centered) {
        out = sup_over_intervals(
            f.domain, cfg.max_cells,
            [&](std::size_t a, std::size_t max_len, std::vector<double>& vals) {
                for (std::size_t len = 1; len <= max_len; ++len) vals[len - 1] = value(CellRange{a, len});
            },
            value);
    } else {
        out = sup_over_family(f.domain, cfg, value);
    }
    return GridFunction(f.domain, std::move(out));
}

GridFunction dyadic_maximal(const GridFunction& f, const DyadicGrid& grid) {
    require(f.domain == grid.domain(), "grid and function live on different domains");
    const PrefixSum ps(powered_abs(f, 1.0));
    std::vector<double> out(f.size(), 0.0);
    for (const auto& q : grid.all_cubes()) {
        const double v = ps.sum(q.cells) / static_cast<double>(q.cells.len);
        for (std::size_t k = 0; k < q.cells.len; ++k) {
            const std::size_t i = q.cells.at(k, f.size());
            out[i] = std::max(out[i], v);
        }
    }
    return GridFunction(f.domain, std::move(out));
}

GridFunction orlicz_maximal(const GridFunction& f, const YoungFunction& phi, const MaximalConfig& cfg) {
    if (phi.kind() == GaugeKind::Power) {
        auto m = hl_maximal(f, cfg, phi.p());
        if (phi.coefficient() != 1.0) {
            const double c = std::pow(phi.coefficient(), 1.0 / phi.p());
            for (double& v : m.values) v *= c;
        }
        return m;
    }
    const std::vector<double> a = powered_abs(f, 1.0);
    auto value = [&](const CellRange& q) { return luxemburg_solve(cells_of(a, q), phi).norm; };
    return GridFunction(f.domain, sup_over_family(f.domain, cfg, value));
}

GridFunction weighted_centered_maximal(const GridFunction& h, const GridFunction& w) {
    require_weight(w);
    require(w.size() == h.size(), "weight size does not match the function");
    std::vector<double> hw(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) hw[i] = std::fabs(h[i]) * w[i];
    const PrefixSum num(hw);
    const PrefixSum den(w.values);
    MaximalConfig cfg;
    cfg.centered = true;
    auto value = [&](const CellRange& q) { return q.len == 1 ? std::fabs(h[q.lo]) : num.sum(q) / den.sum(q); };
    return GridFunction(h.domain, sup_over_family(h.domain, cfg, value));
}

GridFunction sharp_maximal(const GridFunction& f, double delta, const MaximalConfig& cfg) {
    require(delta > 0.0 && delta < 1.0 + 1e-15, "sharp maximal exponent must lie in (0,1]");
    const auto g = powered_abs(f, delta);
    auto finish = [&](double dev) { return dev <= 0.0 ? 0.0 : root_of(dev, delta); };
    if (cfg.family == CubeFamily::AllIntervals && !cfg.centered) {
        const std::size_t n = f.size();
        auto row = [&](std::size_t a, std::size_t max_len, std::vector<double>& vals) {
            std::vector<double> sorted;
            sorted.reserve(max_len);
            for (std::size_t len = 1; len <= max_len; ++len) {
                const double x = g[(a + len - 1) % n];
                sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), x), x);
                const double m = sorted[(len - 1) / 2];
                double s = 0.0;
                for (double y : sorted) s += std::fabs(y - m);
                vals[len - 1] = finish(s / static_cast<double>(len));
            }
        };
        auto whole = [&](const CellRange& q) { return finish(mean_abs_deviation(cells_of(g, q))); };
        return GridFunction(f.domain, sup_over_intervals(f.domain, cfg.max_cells, row, whole));
    }
    auto value = [&](const CellRange& q) { return finish(mean_abs_deviation(cells_of(g, q))); };
    return GridFunction(f.domain, sup_over_family(f.domain, cfg, value));
}

GridFunction local_sharp_maximal(const GridFunction& f, double lambda, const DyadicCube& root, const DyadicGrid& grid) {
    require(lambda > 0.0 && lambda < 1.0, "oscillation parameter must lie in (0,1)");
    require(f.domain == grid.domain(), "grid and function live on different domains");
    std::vector<double> out(f.size(), 0.0);
    std::function<void(const DyadicCube&, double)> walk = [&](const DyadicCube& q, double above) {
        const double here = std::max(above, local_oscillation(f, q.cells, lambda));
        if (q.cells.len == 1) {
            out[q.cells.lo] = here;
            return;
        }
        const auto kids = grid.children(q);
        if (kids.empty()) {
            for (std::size_t k = 0; k < q.cells.len; ++k) out[q.cells.at(k, f.size())] = here;
        }
        for (const auto& c : kids) walk(c, here);
    };
    walk(root, 0.0);
    return GridFunction(f.domain, std::move(out));
}

}  // namespace conelab
