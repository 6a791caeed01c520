#include "conelab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conelab/error.hpp"

namespace conelab {

namespace {

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

long long mod_pos(long long a, long long n) { return ((a % n) + n) % n; }

std::vector<double> samples_of(const GridFunction& f, const CellRange& q) {
    require(q.len > 0, "empty cube");
    std::vector<double> out(q.len);
    for (std::size_t k = 0; k < q.len; ++k) out[k] = f[q.at(k, f.size())];
    return out;
}

// ceil(x) that treats values within rounding noise of an integer as that integer.
std::size_t ceil_cells(double x) {
    const double r = std::round(x);
    if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

void two_sum(double a, double b, double& s, double& err) {
    s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
}

}  // namespace

DyadicGrid::DyadicGrid(const Domain& domain, int shift) : domain_(domain), shift_(shift) {
    require(shift >= 0 && shift <= 2, "grid shift index must be 0, 1 or 2");
    offset_ = static_cast<std::size_t>(std::llround(static_cast<double>(shift) * static_cast<double>(domain.n) / 3.0)) %
              domain.n;
}

std::optional<DyadicCube> DyadicGrid::make(int lvl, long long start) const {
    const auto n = static_cast<long long>(domain_.n);
    const auto side = static_cast<long long>(side_cells(lvl));
    if (domain_.periodic()) {
        const long long s = mod_pos(start, n);
        return DyadicCube{lvl, s, CellRange{static_cast<std::size_t>(s), static_cast<std::size_t>(side)}};
    }
    const long long a = std::max(start, 0LL);
    const long long b = std::min(start + side, n);
    if (b <= a) return std::nullopt;
    return DyadicCube{lvl, start, CellRange{static_cast<std::size_t>(a), static_cast<std::size_t>(b - a)}};
}

std::vector<DyadicCube> DyadicGrid::level(int k) const {
    require(k >= 0 && k <= max_level(), "dyadic level out of range");
    const auto n = static_cast<long long>(domain_.n);
    const auto side = static_cast<long long>(side_cells(k));
    const auto off = static_cast<long long>(offset_);
    std::vector<DyadicCube> out;
    if (domain_.periodic()) {
        for (long long m = 0; m < n / side; ++m) out.push_back(*make(k, off + m * side));
        std::sort(out.begin(), out.end());
        return out;
    }
    long long start = off % side;
    if (start > 0) start -= side;
    for (; start < n; start += side) {
        if (auto c = make(k, start)) out.push_back(*c);
    }
    return out;
}

std::vector<DyadicCube> DyadicGrid::children(const DyadicCube& q) const {
    std::vector<DyadicCube> out;
    if (q.level >= max_level()) return out;
    const auto half = static_cast<long long>(side_cells(q.level + 1));
    for (long long s : {q.start, q.start + half}) {
        if (auto c = make(q.level + 1, s)) out.push_back(*c);
    }
    return out;
}

std::optional<DyadicCube> DyadicGrid::parent(const DyadicCube& q) const {
    if (q.level == 0) return std::nullopt;
    const auto n = static_cast<long long>(domain_.n);
    const auto side2 = static_cast<long long>(side_cells(q.level - 1));
    const auto off = static_cast<long long>(offset_);
    long long rel = q.start - off;
    if (domain_.periodic()) rel = mod_pos(rel, n);
    return make(q.level - 1, off + floor_div(rel, side2) * side2);
}

DyadicCube DyadicGrid::containing(std::size_t cell, int lvl) const {
    const auto side = static_cast<long long>(side_cells(lvl));
    const auto off = static_cast<long long>(offset_);
    long long rel = static_cast<long long>(cell) - off;
    if (domain_.periodic()) rel = mod_pos(rel, static_cast<long long>(domain_.n));
    return *make(lvl, off + floor_div(rel, side) * side);
}

std::vector<DyadicCube> DyadicGrid::all_cubes() const {
    std::vector<DyadicCube> out;
    for (int k = 0; k <= max_level(); ++k) {
        auto lv = level(k);
        out.insert(out.end(), lv.begin(), lv.end());
    }
    return out;
}

bool SparseFamily::verify(std::string* why) const {
    const std::size_t n = domain.n;
    std::vector<char> owner(n, 0);
    for (const auto& m : members) {
        std::size_t count = 0;
        for (const auto& run : m.selected) {
            for (std::size_t k = 0; k < run.len; ++k) {
                const std::size_t c = run.at(k, n);
                if (!m.cube.cells.contains(c, n)) {
                    if (why) *why = "selected set leaves its cube";
                    return false;
                }
                if (owner[c]) {
                    if (why) *why = "selected sets overlap";
                    return false;
                }
                owner[c] = 1;
                ++count;
            }
        }
        if (static_cast<double>(count) < eta * static_cast<double>(m.cube.cells.len)) {
            if (why) *why = "selected set below the sparsity fraction";
            return false;
        }
    }
    return true;
}

nlohmann::json SparseFamily::to_json() const {
    nlohmann::json j;
    j["grid_shift"] = grid_shift;
    j["eta"] = eta;
    j["n"] = domain.n;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& m : members) {
        nlohmann::json e;
        e["level"] = m.cube.level;
        e["index"] = m.cube.start;
        e["cells"] = {m.cube.cells.lo, m.cube.cells.len};
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : m.selected) runs.push_back({r.lo, r.len});
        e["E"] = runs;
        list.push_back(e);
    }
    j["members"] = list;
    return j;
}

SparseFamily SparseFamily::from_json(const nlohmann::json& j, const Domain& domain) {
    SparseFamily fam;
    fam.domain = domain;
    fam.grid_shift = j.at("grid_shift").get<int>();
    fam.eta = j.at("eta").get<double>();
    for (const auto& e : j.at("members")) {
        SparseMember m;
        m.cube.level = e.at("level").get<int>();
        m.cube.start = e.at("index").get<long long>();
        m.cube.cells = CellRange{e.at("cells")[0].get<std::size_t>(), e.at("cells")[1].get<std::size_t>()};
        for (const auto& r : e.at("E")) m.selected.push_back(CellRange{r[0].get<std::size_t>(), r[1].get<std::size_t>()});
        fam.members.push_back(std::move(m));
    }
    return fam;
}

double median_of_samples(std::vector<double> v) {
    require(!v.empty(), "empty cube");
    std::sort(v.begin(), v.end());
    const std::size_t len = v.size();
    std::size_t i = 0;
    while (i < len) {
        std::size_t j = i;
        while (j < len && v[j] == v[i]) ++j;
        const std::size_t less = i;
        const std::size_t greater = len - j;
        if (2 * less <= len && 2 * greater <= len) return v[i];
        i = j;
    }
    return v.back();
}

double rearrangement_of_samples(std::vector<double> v, double t_cells) {
    require(t_cells > 0.0, "rearrangement requires t > 0");
    require(!v.empty(), "empty cube");
    const std::size_t k = ceil_cells(t_cells);
    if (k > v.size()) return 0.0;
    for (double& x : v) x = std::fabs(x);
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k - 1), v.end(), std::greater<>());
    return v[k - 1];
}

double oscillation_of_samples(std::vector<double> v, double lambda) {
    require(lambda > 0.0 && lambda < 1.0, "oscillation parameter must lie in (0,1)");
    require(!v.empty(), "empty cube");
    const std::size_t len = v.size();
    const std::size_t k = std::max<std::size_t>(1, ceil_cells(lambda * static_cast<double>(len)));
    const std::size_t cover = len - k + 1;
    std::sort(v.begin(), v.end());
    double best = v.back() - v.front();
    for (std::size_t i = 0; i + cover <= len; ++i) best = std::min(best, v[i + cover - 1] - v[i]);
    return 0.5 * best;
}

double median(const GridFunction& f, const CellRange& q) { return median_of_samples(samples_of(f, q)); }
double median(const GridFunction& f, const Cube& q) { return median(f, aligned_cells(f.domain, q)); }

double rearrangement(const GridFunction& f, const CellRange& q, double t) {
    require(t > 0.0, "rearrangement requires t > 0");
    return rearrangement_of_samples(samples_of(f, q), t / f.domain.h());
}
double rearrangement(const GridFunction& f, const Cube& q, double t) {
    return rearrangement(f, aligned_cells(f.domain, q), t);
}

double local_oscillation(const GridFunction& f, const CellRange& q, double lambda) {
    return oscillation_of_samples(samples_of(f, q), lambda);
}
double local_oscillation(const GridFunction& f, const Cube& q, double lambda) {
    return local_oscillation(f, aligned_cells(f.domain, q), lambda);
}

bool exact_sum_is_zero(const std::vector<double>& terms) {
    std::vector<double> expansion;
    for (double x : terms) {
        double q = x;
        std::vector<double> next;
        for (double e : expansion) {
            double s;
            double err;
            two_sum(q, e, s, err);
            if (err != 0.0) next.push_back(err);
            q = s;
        }
        if (q != 0.0) next.push_back(q);
        expansion.swap(next);
    }
    return expansion.empty();
}

std::vector<double> CZDecomposition::bad_piece(std::size_t j) const {
    const auto& c = cubes.at(j).cells;
    std::vector<double> out(c.len);
    for (std::size_t k = 0; k < c.len; ++k) out[k] = bad[c.at(k, bad.size())];
    return out;
}

CZDecomposition cz_decompose(const GridFunction& f, double lambda, const DyadicGrid& grid) {
    require(lambda > 0.0, "CZ level must be positive");
    require(f.domain == grid.domain(), "grid and function live on different domains");
    const std::size_t n = f.size();

    // Sums built bottom-up so a parent's sum dominates each child's exactly.
    std::map<DyadicCube, std::pair<double, double>> sums;  // (sum |f|, sum f)
    std::function<std::pair<double, double>(const DyadicCube&)> accumulate = [&](const DyadicCube& q) {
        std::pair<double, double> s{0.0, 0.0};
        if (q.level == grid.max_level()) {
            const double v = f[q.cells.lo];
            s = {std::fabs(v), v};
        } else {
            for (const auto& c : grid.children(q)) {
                const auto cs = accumulate(c);
                s.first += cs.first;
                s.second += cs.second;
            }
        }
        sums[q] = s;
        return s;
    };

    CZDecomposition cz;
    cz.lambda = lambda;
    cz.good = f;
    cz.bad = GridFunction::zeros(f.domain);
    cz.bad_tail = GridFunction::zeros(f.domain);
    cz.omega.assign(n, 0);

    std::function<void(const DyadicCube&, bool)> select = [&](const DyadicCube& q, bool is_root) {
        const auto [sabs, s] = sums.at(q);
        const double len = static_cast<double>(q.cells.len);
        if (sabs / len > lambda) {
            if (is_root) cz.roots_selected = true;
            cz.cubes.push_back(q);
            const double mean = s / len;
            cz.cube_means.push_back(mean);
            for (std::size_t k = 0; k < q.cells.len; ++k) {
                const std::size_t i = q.cells.at(k, n);
                double b;
                double tail;
                two_sum(f[i], -mean, b, tail);
                cz.good[i] = mean;
                cz.bad[i] = b;
                cz.bad_tail[i] = tail;
                cz.omega[i] = 1;
            }
            return;
        }
        for (const auto& c : grid.children(q)) select(c, false);
    };

    for (const auto& r : grid.roots()) {
        accumulate(r);
        select(r, true);
    }
    return cz;
}

CZReport check_cz(const GridFunction& f, const CZDecomposition& cz, const DyadicGrid& grid) {
    CZReport rep;
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!exact_sum_is_zero({cz.good[i], cz.bad[i], cz.bad_tail[i], -f[i]})) rep.reconstruction_exact = false;
        if (!(std::fabs(cz.good[i]) <= 2.0 * cz.lambda)) rep.good_bounded = false;
        if (!cz.omega[i] && (cz.bad[i] != 0.0 || cz.bad_tail[i] != 0.0)) rep.supports_ok = false;
    }
    std::vector<char> seen(n, 0);
    for (std::size_t j = 0; j < cz.cubes.size(); ++j) {
        const auto& c = cz.cubes[j].cells;
        double abs_sum = 0.0;
        double bad_sum = 0.0;
        for (std::size_t k = 0; k < c.len; ++k) {
            const std::size_t i = c.at(k, n);
            if (seen[i]) rep.supports_ok = false;
            seen[i] = 1;
            abs_sum += std::fabs(f[i]);
            bad_sum += cz.bad[i] + cz.bad_tail[i];
        }
        if (!(abs_sum / static_cast<double>(c.len) > cz.lambda)) rep.averages_exceed = false;
        rep.max_mean_bad = std::max(rep.max_mean_bad, std::fabs(bad_sum) / static_cast<double>(c.len));
        (void)grid;
    }
    return rep;
}

namespace {

struct MedianBuilder {
    const GridFunction& f;
    const DyadicGrid& grid;
    MedianSparseResult& out;
    static constexpr double kLambda = 0.125;

    void build(const DyadicCube& q) {
        const std::size_t n = f.size();
        const auto& cells = q.cells;
        std::vector<double> vals(cells.len);
        for (std::size_t k = 0; k < cells.len; ++k) vals[k] = f[cells.at(k, n)];
        const double med = median_of_samples(vals);
        const double osc = oscillation_of_samples(vals, kLambda);
        // E = {|f - m_f(Q)| > 2 omega} in cell offsets relative to Q.
        std::vector<std::size_t> prefix(cells.len + 1, 0);
        for (std::size_t k = 0; k < cells.len; ++k) {
            prefix[k + 1] = prefix[k] + (std::fabs(vals[k] - med) > 2.0 * osc ? 1 : 0);
        }
        std::vector<DyadicCube> stops;
        if (prefix[cells.len] > 0) {
            std::function<void(const DyadicCube&)> descend = [&](const DyadicCube& p) {
                const std::size_t rel = (p.cells.lo + n - cells.lo) % n;
                const std::size_t count = prefix[rel + p.cells.len] - prefix[rel];
                if (4 * count >= p.cells.len) {
                    stops.push_back(p);
                    return;
                }
                if (count == 0) return;
                for (const auto& c : grid.children(p)) descend(c);
            };
            for (const auto& c : grid.children(q)) descend(c);
        }
        if (osc > 0.0) {
            std::vector<char> covered(cells.len, 0);
            for (const auto& p : stops) {
                const std::size_t rel = (p.cells.lo + n - cells.lo) % n;
                std::fill(covered.begin() + static_cast<long>(rel), covered.begin() + static_cast<long>(rel + p.cells.len), 1);
            }
            SparseMember m;
            m.cube = q;
            std::size_t k = 0;
            while (k < cells.len) {
                if (covered[k]) {
                    ++k;
                    continue;
                }
                std::size_t e = k;
                while (e < cells.len && !covered[e]) ++e;
                // Split runs at the torus seam so stored runs never wrap.
                std::size_t a = k;
                while (a < e) {
                    const std::size_t abs_lo = (cells.lo + a) % n;
                    const std::size_t room = n - abs_lo;
                    const std::size_t take = std::min(e - a, room);
                    m.selected.push_back(CellRange{abs_lo, take});
                    a += take;
                }
                k = e;
            }
            out.family.members.push_back(std::move(m));
            out.oscillations.push_back(osc);
            for (std::size_t j = 0; j < cells.len; ++j) out.bound[cells.at(j, n)] += 2.0 * osc;
        }
        for (const auto& p : stops) build(p);
    }
};

}  // namespace

MedianSparseResult median_oscillation_sparse(const GridFunction& f, const DyadicCube& root, const DyadicGrid& grid) {
    require(f.domain == grid.domain(), "grid and function live on different domains");
    MedianSparseResult out;
    out.family.domain = f.domain;
    out.family.grid_shift = grid.shift();
    out.family.eta = 0.5;
    out.bound.assign(f.size(), 0.0);
    std::vector<double> vals(root.cells.len);
    for (std::size_t k = 0; k < root.cells.len; ++k) vals[k] = f[root.cells.at(k, f.size())];
    out.root_median = median_of_samples(vals);
    MedianBuilder builder{f, grid, out};
    builder.build(root);
    for (std::size_t k = 0; k < root.cells.len; ++k) {
        const std::size_t i = root.cells.at(k, f.size());
        out.max_violation = std::max(out.max_violation, std::fabs(f[i] - out.root_median) - out.bound[i]);
    }
    out.max_violation = std::max(out.max_violation, 0.0);
    return out;
}

double carleson_packing(const std::map<DyadicCube, double>& a, const GridFunction& w, const DyadicGrid& grid) {
    require_weight(w);
    std::map<DyadicCube, double> totals;
    for (const auto& [q, val] : a) {
        require(val >= 0.0, "Carleson coefficients must be nonnegative");
        std::optional<DyadicCube> cur = q;
        while (cur) {
            totals[*cur] += val;
            cur = grid.parent(*cur);
        }
    }
    const PrefixSum pw(w.values);
    double best = 0.0;
    for (const auto& [q, total] : totals) {
        const double wq = pw.sum(q.cells) * w.domain.h();
        best = std::max(best, total / wq);
    }
    return best;
}

std::string to_string(CubeFamily family) {
    switch (family) {
        case CubeFamily::AllIntervals: return "all-intervals";
        case CubeFamily::Dyadic: return "dyadic";
        case CubeFamily::ThreeGrid: return "three-grid";
    }
    return "dyadic";
}

CubeFamily parse_cube_family(const std::string& text) {
    if (text == "all-intervals" || text == "all") return CubeFamily::AllIntervals;
    if (text == "dyadic") return CubeFamily::Dyadic;
    if (text == "three-grid" || text == "shifted") return CubeFamily::ThreeGrid;
    throw PreconditionError("unknown cube family '" + text + "'");
}

void for_each_cube(const Domain& domain, CubeFamily family, const std::function<void(const CellRange&)>& visit) {
    const std::size_t n = domain.n;
    if (family == CubeFamily::AllIntervals) {
        if (domain.periodic()) {
            for (std::size_t lo = 0; lo < n; ++lo) {
                for (std::size_t len = 1; len < n; ++len) visit(CellRange{lo, len});
            }
            visit(CellRange{0, n});
        } else {
            for (std::size_t lo = 0; lo < n; ++lo) {
                for (std::size_t len = 1; lo + len <= n; ++len) visit(CellRange{lo, len});
            }
        }
        return;
    }
    const int grids = family == CubeFamily::Dyadic ? 1 : 3;
    for (int g = 0; g < grids; ++g) {
        DyadicGrid grid(domain, g);
        for (const auto& q : grid.all_cubes()) visit(q.cells);
    }
}

}  // namespace conelab
