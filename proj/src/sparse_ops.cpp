#include "conelab/sparse_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "conelab/error.hpp"

namespace conelab {

namespace {

// Range r lies inside cube range c (both may wrap on the torus).
bool range_inside(const CellRange& r, const CellRange& c, std::size_t n, bool periodic) {
    if (!periodic) return c.lo <= r.lo && r.lo + r.len <= c.lo + c.len;
    if (c.len >= n) return true;
    return (r.lo + n - c.lo) % n + r.len <= c.len;
}

// Smallest cube of the grid containing r, with its nominal side in cells.
std::optional<DyadicCube> minimal_cube(const DyadicGrid& grid, const CellRange& r) {
    const Domain& d = grid.domain();
    for (int level = grid.max_level(); level >= 0; --level) {
        if (grid.side_cells(level) < r.len) continue;
        const DyadicCube c = grid.containing(r.lo, level);
        if (range_inside(r, c.cells, d.n, d.periodic())) return c;
    }
    return std::nullopt;
}

// Non-wrapping runs of the cells of q not covered by any of the removed ranges.
std::vector<CellRange> remaining_runs(const CellRange& q, const std::vector<CellRange>& removed, std::size_t n) {
    std::vector<char> keep(q.len, 1);
    for (const auto& r : removed) {
        for (std::size_t k = 0; k < r.len; ++k) keep[(r.at(k, n) + n - q.lo) % n] = 0;
    }
    std::vector<CellRange> runs;
    for (std::size_t k = 0; k < q.len; ++k) {
        if (!keep[k]) continue;
        const std::size_t cell = q.at(k, n);
        if (!runs.empty() && runs.back().lo + runs.back().len == cell) {
            ++runs.back().len;
        } else {
            runs.push_back({cell, 1});
        }
    }
    return runs;
}

// Principal cubes of |f| among the candidates: a cube is kept when it has no
// kept ancestor or its average exceeds twice that of the nearest one.
SparseFamily principal_family(const GridFunction& f, const DyadicGrid& grid, const std::set<DyadicCube>& candidates) {
    const std::size_t n = f.size();
    SparseFamily fam;
    fam.domain = f.domain;
    fam.grid_shift = grid.shift();
    fam.eta = 0.5;
    std::map<DyadicCube, double> kept;
    std::map<DyadicCube, std::vector<CellRange>> children;
    for (const auto& p : candidates) {  // coarse levels first
        const double avg = abs_average(f, p.cells);
        std::optional<DyadicCube> anc = grid.parent(p);
        while (anc && !kept.count(*anc)) anc = grid.parent(*anc);
        if (anc && !(avg > 2.0 * kept.at(*anc))) continue;
        kept.emplace(p, avg);
        if (anc) children[*anc].push_back(p.cells);
    }
    for (const auto& [cube, avg] : kept) {
        (void)avg;
        const auto it = children.find(cube);
        const std::vector<CellRange> none;
        fam.members.push_back({cube, remaining_runs(cube.cells, it == children.end() ? none : it->second, n)});
    }
    return fam;
}

void add_on_cells(std::vector<double>& out, const CellRange& q, double value) {
    const std::size_t n = out.size();
    for (std::size_t k = 0; k < q.len; ++k) out[q.at(k, n)] += value;
}

}  // namespace

CellRange dilate(const Domain& d, const DyadicCube& q, int j, bool* clipped) {
    require(j >= 0, "dilation exponent must be nonnegative");
    const auto n = static_cast<long long>(d.n);
    const long long side = n >> q.level;
    // Twice the centre and twice the half-width, in cells.
    const long long centre2 = 2 * q.start + side;
    const long long width2 = j >= 62 ? 4 * n : std::min(side << std::min(j, 40), 4 * n);
    const long long lo2 = centre2 - width2, hi2 = centre2 + width2;
    const long long lo = lo2 >= 0 ? lo2 / 2 : -((-lo2 + 1) / 2);
    const long long hi = hi2 >= 0 ? (hi2 + 1) / 2 : -((-hi2) / 2);
    if (d.periodic()) {
        if (clipped) *clipped = hi - lo > n;
        if (hi - lo >= n) return {0, d.n};
        return {static_cast<std::size_t>(((lo % n) + n) % n), static_cast<std::size_t>(hi - lo)};
    }
    const long long a = std::max(lo, 0LL), b = std::min(hi, n);
    if (clipped) *clipped = a != lo || b != hi;
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b - a)};
}

double abs_average(const GridFunction& f, const CellRange& q) {
    require(q.len > 0, "average over an empty range");
    double s = 0.0;
    for (std::size_t k = 0; k < q.len; ++k) s += std::fabs(f[q.at(k, f.size())]);
    return s / static_cast<double>(q.len);
}

GridFunction sparse_square(const GridFunction& f, const SparseFamily& family) {
    require(f.domain == family.domain, "function and family live on different domains");
    std::vector<double> sums(f.size(), 0.0);
    for (const auto& m : family.members) {
        const double a = abs_average(f, m.cube.cells);
        add_on_cells(sums, m.cube.cells, a * a);
    }
    for (double& v : sums) v = std::sqrt(v);
    return GridFunction(f.domain, std::move(sums));
}

GridFunction sparse_bilinear(const GridFunction& f, const GridFunction& g, const SparseFamily& family) {
    require(f.domain == family.domain && g.domain == family.domain, "function and family live on different domains");
    std::vector<double> sums(f.size(), 0.0);
    for (const auto& m : family.members) {
        add_on_cells(sums, m.cube.cells, abs_average(f, m.cube.cells) * abs_average(g, dilate(f.domain, m.cube, 1)));
    }
    return GridFunction(f.domain, std::move(sums));
}

GridFunction dilated_bilinear(const GridFunction& f, const GridFunction& g, const SparseFamily& family, int j) {
    require(f.domain == family.domain && g.domain == family.domain, "function and family live on different domains");
    std::vector<double> sums(f.size(), 0.0);
    for (const auto& m : family.members) {
        const CellRange big = dilate(f.domain, m.cube, j);
        add_on_cells(sums, m.cube.cells, abs_average(f, big) * abs_average(g, big));
    }
    return GridFunction(f.domain, std::move(sums));
}

GridFunction dilated_square(const GridFunction& f, const SparseFamily& family, int j) {
    auto out = dilated_bilinear(f, f, family, j);
    for (double& v : out.values) v = std::sqrt(v);
    return out;
}

nlohmann::json DominationCertificate::to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["dimension"] = dimension;
    j["delta"] = delta;
    j["c_dom"] = c_dom;
    j["taa_constant"] = taa_constant;
    j["max_dilation"] = max_dilation;
    j["clipped_dilations"] = clipped_dilations;
    j["candidate_cubes"] = candidate_cubes;
    j["oscillation_family"] = oscillation_family.to_json();
    nlohmann::json fams = nlohmann::json::array();
    for (const auto& fam : families) fams.push_back(fam.to_json());
    j["families"] = fams;
    j["ratio"] = ratio.values;
    return j;
}

DominationCertificate dominate(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                               const DominationConfig& cfg) {
    require(f.domain == field.domain(), "function and field live on different domains");
    require(cfg.delta > 0.0, "dilation decay delta must be positive");
    require(cfg.series_tolerance > 0.0 && cfg.series_tolerance < 1.0, "series tolerance must lie in (0, 1)");
    for (double v : f.values) require(std::isfinite(v), "f must be bounded");
    const Domain& d = f.domain;

    DominationCertificate cert;
    cert.alpha = cone.alpha;
    cert.delta = cfg.delta;
    std::vector<DyadicGrid> grids;
    for (int g = 0; g < 3; ++g) {
        grids.emplace_back(d, g);
        SparseFamily empty;
        empty.domain = d;
        empty.grid_shift = g;
        cert.families.push_back(empty);
    }
    cert.oscillation_family.domain = d;
    cert.numerator = GridFunction::zeros(d);
    cert.smooth = cert.numerator;
    cert.wide = cert.numerator;
    cert.denominator = GridFunction::zeros(d);
    cert.ratio = GridFunction::zeros(d);
    if (f.max_abs() == 0.0) return cert;

    const ConeTriple tri = cone_triple(f, field, cone);
    cert.numerator = tri.narrow;
    cert.smooth = tri.smooth;
    cert.wide = tri.wide;
    GridFunction smooth_sq = tri.smooth;
    for (double& v : smooth_sq.values) v *= v;

    const DyadicCube root = grids[0].roots().front();
    const auto osc = median_oscillation_sparse(smooth_sq, root, grids[0]);
    cert.oscillation_family = osc.family;
    std::set<DyadicCube> stopping;
    stopping.insert(root);
    for (const auto& m : osc.family.members) stopping.insert(m.cube);

    // Dilated series per stopping cube and its three-grid candidates.
    GridFunction abs_f = f.abs();
    const PrefixSum prefix(abs_f.values);
    std::vector<std::set<DyadicCube>> candidates(3);
    std::vector<double> series(d.n, 0.0);
    for (const auto& q : stopping) {
        double running = 0.0;
        for (int j = 0; j <= 200; ++j) {
            bool clipped = false;
            const CellRange big = dilate(d, q, j, &clipped);
            const double avg = prefix.sum(big) / static_cast<double>(big.len);
            const double term = std::exp2(-j * cfg.delta) * avg * avg;
            if (j > 0 && term < cfg.series_tolerance * running) break;
            running += term;
            cert.max_dilation = std::max(cert.max_dilation, j);
            cert.clipped_dilations += clipped;
            std::optional<DyadicCube> best;
            int best_grid = 0;
            for (int g = 0; g < 3; ++g) {
                const auto c = minimal_cube(grids[static_cast<std::size_t>(g)], big);
                if (c && (!best || c->level > best->level)) {
                    best = c;
                    best_grid = g;
                }
            }
            require(best.has_value(), "no three-grid cube contains a dilated cube");
            candidates[static_cast<std::size_t>(best_grid)].insert(*best);
        }
        add_on_cells(series, q.cells, running);
    }

    std::vector<double> square_sum(d.n, 0.0);
    for (int g = 0; g < 3; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        cert.candidate_cubes += candidates[gi].size();
        cert.families[gi] = principal_family(f, grids[gi], candidates[gi]);
        const auto a = sparse_square(f, cert.families[gi]);
        for (std::size_t x = 0; x < d.n; ++x) {
            cert.denominator[x] += a[x];
            square_sum[x] += a[x] * a[x];
        }
    }
    for (std::size_t x = 0; x < d.n; ++x) {
        const double num = cert.numerator[x], den = cert.denominator[x];
        if (den > 0.0) {
            cert.ratio[x] = num / den;
        } else if (num > 0.0) {
            throw NumericalError("domination failed: sparse bound vanishes where S f does not");
        }
        cert.c_dom = std::max(cert.c_dom, cert.ratio[x]);
        if (square_sum[x] > 0.0) cert.taa_constant = std::max(cert.taa_constant, series[x] / square_sum[x]);
    }
    return cert;
}

}  // namespace conelab
