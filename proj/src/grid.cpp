#include "conelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "conelab/error.hpp"

namespace conelab {

std::string to_string(DomainMode mode) {
    return mode == DomainMode::PeriodicTorus ? "periodic-torus" : "truncated-line";
}

DomainMode parse_domain_mode(const std::string& text) {
    if (text == "periodic-torus" || text == "torus" || text == "periodic") return DomainMode::PeriodicTorus;
    if (text == "truncated-line" || text == "line" || text == "truncated") return DomainMode::TruncatedLine;
    throw PreconditionError("unknown domain mode '" + text + "'");
}

Domain Domain::make(DomainMode mode, double left, double right, std::size_t n) {
    require(std::isfinite(left) && std::isfinite(right) && left < right, "domain endpoints must satisfy left < right");
    require(n >= 8 && (n & (n - 1)) == 0, "cell count must be a power of two, at least 8");
    return Domain{mode, left, right, n};
}

int Domain::levels() const {
    int k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

std::size_t Domain::cell_of(double x) const {
    double u = std::floor((x - left) / h());
    const double nn = static_cast<double>(n);
    if (periodic()) {
        u = u - nn * std::floor(u / nn);
    } else {
        u = std::clamp(u, 0.0, nn - 1.0);
    }
    return static_cast<std::size_t>(u);
}

GridFunction::GridFunction(Domain d, std::vector<double> v) : domain(d), values(std::move(v)) {
    require(values.size() == domain.n, "grid function size does not match the domain");
    for (double x : values) require(std::isfinite(x), "grid function entries must be finite");
}

GridFunction GridFunction::zeros(const Domain& d) { return GridFunction(d, std::vector<double>(d.n, 0.0)); }

GridFunction GridFunction::constant(const Domain& d, double c) {
    return GridFunction(d, std::vector<double>(d.n, c));
}

GridFunction GridFunction::sample(const Domain& d, const std::function<double(double)>& fn) {
    std::vector<double> v(d.n);
    for (std::size_t i = 0; i < d.n; ++i) v[i] = fn(d.x(i));
    return GridFunction(d, std::move(v));
}

GridFunction GridFunction::abs() const {
    GridFunction out = *this;
    for (double& x : out.values) x = std::fabs(x);
    return out;
}

GridFunction GridFunction::pow(double r) const {
    GridFunction out = *this;
    for (double& x : out.values) x = std::pow(std::fabs(x), r);
    return out;
}

GridFunction GridFunction::scaled(double c) const {
    GridFunction out = *this;
    for (double& x : out.values) x *= c;
    return out;
}

GridFunction GridFunction::times(const GridFunction& other) const {
    require(other.size() == size(), "size mismatch in pointwise product");
    GridFunction out = *this;
    for (std::size_t i = 0; i < size(); ++i) out.values[i] *= other.values[i];
    return out;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::fabs(x));
    return m;
}

void require_weight(const GridFunction& w, const std::string& what) {
    for (double x : w.values) require(x > 0.0 && std::isfinite(x), what + " must be strictly positive");
}

Cube Cube::from_endpoints(double a, double b) {
    require(b > a, "cube endpoints must satisfy a < b");
    return Cube{0.5 * (a + b), b - a};
}

std::vector<std::pair<std::size_t, double>> cube_overlaps(const Domain& d, const Cube& q) {
    require(q.side > 0.0, "cube sidelength must be positive");
    const double nn = static_cast<double>(d.n);
    double u = (q.left() - d.left) / d.h();
    double v = (q.right() - d.left) / d.h();
    std::vector<std::pair<std::size_t, double>> out;
    if (d.periodic()) {
        if (v - u >= nn) {
            for (std::size_t i = 0; i < d.n; ++i) out.emplace_back(i, 1.0);
            return out;
        }
        const double shift = nn * std::floor(u / nn);
        u -= shift;
        v -= shift;
    } else {
        u = std::max(u, 0.0);
        v = std::min(v, nn);
        if (v <= u) return out;
    }
    const auto first = static_cast<long long>(std::floor(u));
    const auto last = static_cast<long long>(std::ceil(v));
    for (long long i = first; i < last; ++i) {
        const double ov = std::min(v, static_cast<double>(i + 1)) - std::max(u, static_cast<double>(i));
        if (ov <= 0.0) continue;
        const auto idx = static_cast<std::size_t>(((i % static_cast<long long>(d.n)) + static_cast<long long>(d.n)) %
                                                  static_cast<long long>(d.n));
        out.emplace_back(idx, ov);
    }
    return out;
}

CellRange aligned_cells(const Domain& d, const Cube& q) {
    const auto ov = cube_overlaps(d, q);
    require(!ov.empty(), "empty cube");
    for (const auto& [i, w] : ov) require(w == 1.0, "cube is not aligned with the grid");
    return CellRange{ov.front().first, ov.size()};
}

Cube cube_of(const Domain& d, const CellRange& r) {
    const double a = d.left + static_cast<double>(r.lo) * d.h();
    return Cube{a + 0.5 * static_cast<double>(r.len) * d.h(), static_cast<double>(r.len) * d.h()};
}

namespace {

double weighted_average(const GridFunction& f, const Cube& q, bool absolute) {
    const auto ov = cube_overlaps(f.domain, q);
    if (ov.empty()) throw PreconditionError("empty cube");
    double num = 0.0;
    double den = 0.0;
    for (const auto& [i, w] : ov) {
        num += (absolute ? std::fabs(f.values[i]) : f.values[i]) * w;
        den += w;
    }
    return num / den;
}

void check_measure(const GridFunction& f, const GridFunction* w) {
    if (w == nullptr) return;
    require(w->size() == f.size(), "weight size does not match the function");
}

// Levels of |f| sorted descending with the cumulative measure of {|f| >= level}.
std::vector<std::pair<double, double>> descending_levels(const GridFunction& f, const GridFunction* w) {
    const std::size_t n = f.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::fabs(f[a]) > std::fabs(f[b]); });
    const double h = f.domain.h();
    std::vector<std::pair<double, double>> levels;
    double mu = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const double v = std::fabs(f[i]);
        mu += (w ? (*w)[i] : 1.0) * h;
        if (k + 1 < n && std::fabs(f[order[k + 1]]) == v) continue;
        if (v > 0.0) levels.emplace_back(v, mu);
    }
    return levels;
}

}  // namespace

double average(const GridFunction& f, const Cube& q) { return weighted_average(f, q, false); }

double average_abs(const GridFunction& f, const Cube& q) { return weighted_average(f, q, true); }

double lp_norm(const GridFunction& f, double p, const GridFunction* w) {
    require(p > 0.0, "lp_norm requires p > 0");
    check_measure(f, w);
    const double h = f.domain.h();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = std::fabs(f[i]);
        if (a == 0.0) continue;
        s += std::pow(a, p) * (w ? (*w)[i] : 1.0) * h;
    }
    return std::pow(s, 1.0 / p);
}

double weak_lp_norm(const GridFunction& f, double p, const GridFunction* w) {
    require(p > 0.0, "weak_lp_norm requires p > 0");
    check_measure(f, w);
    double best = 0.0;
    for (const auto& [v, mu] : descending_levels(f, w)) best = std::max(best, v * std::pow(mu, 1.0 / p));
    return best;
}

double lorentz_p1_norm(const GridFunction& f, double p, const GridFunction* mu) {
    require(p > 1.0, "lorentz_p1_norm requires p > 1");
    check_measure(f, mu);
    auto levels = descending_levels(f, mu);
    std::reverse(levels.begin(), levels.end());
    double sum = 0.0;
    double prev = 0.0;
    for (const auto& [v, m] : levels) {
        sum += (v - prev) * std::pow(m, 1.0 / p);
        prev = v;
    }
    return p * sum;
}

double measure(const Domain& d, const std::vector<char>& mask, const GridFunction* w) {
    require(mask.size() == d.n, "mask size does not match the domain");
    double s = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
        if (mask[i]) s += (w ? (*w)[i] : 1.0) * d.h();
    }
    return s;
}

double integral(const GridFunction& f) {
    double s = 0.0;
    for (double x : f.values) s += x;
    return s * f.domain.h();
}

PrefixSum::PrefixSum(const std::vector<double>& values) : prefix_(values.size() + 1, 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) prefix_[i + 1] = prefix_[i] + values[i];
}

double PrefixSum::sum(const CellRange& r) const {
    const std::size_t n = size();
    if (r.len >= n) return prefix_[n];
    if (r.lo + r.len <= n) return prefix_[r.lo + r.len] - prefix_[r.lo];
    return (prefix_[n] - prefix_[r.lo]) + prefix_[r.lo + r.len - n];
}

void write_csv(std::ostream& out, const GridFunction& f, const std::vector<std::string>& metadata) {
    for (const auto& line : metadata) out << "# " << line << '\n';
    char buf[96];
    std::snprintf(buf, sizeof buf, "# domain mode=%s left=%.17g right=%.17g n=%zu", to_string(f.domain.mode).c_str(),
                  f.domain.left, f.domain.right, f.domain.n);
    out << buf << '\n' << "x,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", f.x(i), f[i]);
        out << buf << '\n';
    }
}

GridFunction read_csv(std::istream& in, std::optional<Domain> domain) {
    std::string line;
    std::vector<double> xs;
    std::vector<double> vs;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!domain && line.rfind("# domain ", 0) == 0) {
                std::istringstream ss(line.substr(9));
                std::string tok;
                Domain d;
                while (ss >> tok) {
                    const auto eq = tok.find('=');
                    if (eq == std::string::npos) continue;
                    const std::string key = tok.substr(0, eq);
                    const std::string val = tok.substr(eq + 1);
                    if (key == "mode") d.mode = parse_domain_mode(val);
                    if (key == "left") d.left = std::stod(val);
                    if (key == "right") d.right = std::stod(val);
                    if (key == "n") d.n = std::stoul(val);
                }
                domain = Domain::make(d.mode, d.left, d.right, d.n);
            }
            continue;
        }
        if (!header_seen) {
            require(line == "x,value", "CSV header must be 'x,value'");
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        require(comma != std::string::npos, "malformed CSV row: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        vs.push_back(std::stod(line.substr(comma + 1)));
    }
    require(header_seen, "CSV input has no 'x,value' header");
    if (!domain) {
        require(xs.size() >= 2, "cannot infer a domain from fewer than two rows");
        const double h = xs[1] - xs[0];
        const double left = xs[0] - 0.5 * h;
        domain = Domain::line(left, left + h * static_cast<double>(xs.size()), xs.size());
    }
    require(vs.size() == domain->n, "CSV row count does not match the domain");
    return GridFunction(*domain, std::move(vs));
}

}  // namespace conelab
