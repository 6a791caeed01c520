#include "conelab/square.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "conelab/error.hpp"
#include "conelab/simd.hpp"

namespace conelab {

namespace {

constexpr std::size_t kMaxConeCells = 4096;

std::size_t floor4(std::size_t v) { return v & ~std::size_t{3}; }
std::size_t ceil4(std::size_t v) { return (v + 3) & ~std::size_t{3}; }

// Selected time nodes with trapezoid weights in log t.
struct Nodes {
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

Nodes select_nodes(const KernelField& field, double t_min, double t_max) {
    const auto& t = field.times().t;
    const double lo = t_min > 0.0 ? t_min : t.front();
    const double hi = t_max > 0.0 ? t_max : t.back();
    Nodes nodes;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= lo * (1.0 - 1e-12) && t[k] <= hi * (1.0 + 1e-12)) nodes.index.push_back(k);
    }
    require(!nodes.index.empty(), "cone t-range selects no time node");
    const std::size_t m = nodes.index.size();
    nodes.weight.assign(m, 0.0);
    if (m == 1) {
        nodes.weight[0] = field.times().dlogt();
        return nodes;
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double left = std::log(t[nodes.index[i == 0 ? 0 : i - 1]]);
        const double right = std::log(t[nodes.index[i + 1 == m ? m - 1 : i + 1]]);
        nodes.weight[i] = 0.5 * (right - left);
    }
    return nodes;
}

void check_input(const GridFunction& f, const KernelField& field) {
    require(f.domain == field.domain(), "function and field live on different domains");
    require(field.domain().n <= kMaxConeCells, "cone runs are capped at N = 4096");
}

void check_cone(const GridFunction& f, const KernelField& field, const ConeConfig& cone) {
    check_input(f, field);
    require(cone.alpha >= 1.0, "aperture must be at least 1");
    const double h = field.domain().h();
    const double t_min = cone.t_min > 0.0 ? cone.t_min : field.times().t.front();
    require(t_min >= 2.0 * h * (1.0 - 1e-12), "cone finer than grid: t_min must be at least 2h");
    require(cone.t_max == 0.0 || cone.t_max >= t_min, "cone t-range is empty");
}

struct Window {
    std::size_t lo = 0;  // index into the extended array
    std::size_t len = 0;
};

// Extended cell arrays with a pad of n + 8 on both sides; the pad is zero on
// the line and holds periodic copies on the torus. Offsets o = e - (pad + x)
// index weight tables of size 2 span + 1 centred at span.
class Frame {
public:
    explicit Frame(const Domain& d) : n_(d.n), pad_(d.n + 8), h_(d.h()), periodic_(d.periodic()) {}

    std::size_t span() const { return pad_; }
    std::size_t pad() const { return pad_; }

    std::vector<double> extend(const std::vector<double>& v) const {
        std::vector<double> ext(n_ + 2 * pad_, 0.0);
        for (std::size_t e = 0; e < ext.size(); ++e) {
            const long long c = static_cast<long long>(e) - static_cast<long long>(pad_);
            if (c >= 0 && c < static_cast<long long>(n_)) {
                ext[e] = v[static_cast<std::size_t>(c)];
            } else if (periodic_) {
                const long long nn = static_cast<long long>(n_);
                ext[e] = v[static_cast<std::size_t>(((c % nn) + nn) % nn)];
            }
        }
        return ext;
    }

    // Distance between cells o apart (periodic on the torus).
    double distance(long long o) const {
        long long r = o < 0 ? -o : o;
        if (periodic_) {
            r %= static_cast<long long>(n_);
            r = std::min(r, static_cast<long long>(n_) - r);
        }
        return static_cast<double>(r) * h_;
    }

    // Smallest cell radius beyond which every offset is at least `reach` away.
    std::size_t radius(double reach) const {
        const double cells = std::floor(reach / h_) + 1.0;
        return static_cast<std::size_t>(std::min(cells, static_cast<double>(n_ + 4)));
    }

    // Aligned window holding every offset |o| <= radius around cell x.
    Window around(std::size_t x, std::size_t radius) const {
        if (periodic_ && radius + 4 > n_ / 2) return whole(x);
        const std::size_t centre = pad_ + x;
        std::size_t lo = floor4(centre >= radius ? centre - radius : 0);
        std::size_t hi = centre + radius;
        if (!periodic_) {
            lo = std::max(lo, pad_);
            hi = std::min(hi, pad_ + n_ - 1);
        }
        return {lo, ceil4(hi - lo + 1)};
    }

    // Every cell once; on the torus the frame is fixed by x rounded down to four.
    Window whole(std::size_t x) const {
        if (!periodic_) return {pad_, n_};
        return {pad_ + floor4(x) - n_ / 2, n_};
    }

    template <class Fn>
    std::vector<double> table(Fn profile) const {
        std::vector<double> w(2 * pad_ + 1);
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] = profile(distance(static_cast<long long>(j) - static_cast<long long>(pad_)));
        }
        return w;
    }

    // Weights for window w around cell x: offset w.lo - pad - x sits at table
    // index w.lo - x because the table is centred at span() = pad().
    const double* weights_at(const std::vector<double>& table, std::size_t x, const Window& w) const {
        return table.data() + (w.lo - x);
    }

private:
    std::size_t n_;
    std::size_t pad_;
    double h_;
    bool periodic_;
};

enum class Profile { Narrow, Smooth, Wide };

std::vector<double> profile_table(const Frame& frame, Profile p, double aperture) {
    switch (p) {
        case Profile::Narrow: return frame.table([&](double r) { return r < aperture ? 1.0 : 0.0; });
        case Profile::Wide: return frame.table([&](double r) { return r < 2.0 * aperture ? 1.0 : 0.0; });
        case Profile::Smooth: break;
    }
    return frame.table([&](double r) { return cone_profile(r / aperture); });
}

// Squared cone sums for several profiles sharing one window per (x, t).
std::vector<std::vector<double>> cone_sums(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                                           const std::vector<Profile>& profiles) {
    check_cone(f, field, cone);
    const Domain& d = field.domain();
    const Frame frame(d);
    const Nodes nodes = select_nodes(field, cone.t_min, cone.t_max);
    const bool reaches_double = std::any_of(profiles.begin(), profiles.end(), [](Profile p) { return p != Profile::Narrow; });
    std::vector<std::vector<double>> sums(profiles.size(), std::vector<double>(d.n, 0.0));
    std::vector<double> sq(d.n);
    for (std::size_t i = 0; i < nodes.index.size(); ++i) {
        const std::size_t k = nodes.index[i];
        const double t = field.times().t[k];
        const double aperture = cone.alpha * t;
        const auto q = field.apply(k, f.values);
        for (std::size_t y = 0; y < d.n; ++y) sq[y] = q[y] * q[y];
        const auto ext = frame.extend(sq);
        std::vector<std::vector<double>> tables;
        for (Profile p : profiles) tables.push_back(profile_table(frame, p, aperture));
        const std::size_t radius = frame.radius(reaches_double ? 2.0 * aperture : aperture);
        const double c = nodes.weight[i] * d.h() / t;
        for (std::size_t x = 0; x < d.n; ++x) {
            const Window w = frame.around(x, radius);
            for (std::size_t p = 0; p < profiles.size(); ++p) {
                sums[p][x] += c * simd::dot(frame.weights_at(tables[p], x, w), ext.data() + w.lo, w.len);
            }
        }
    }
    return sums;
}

GridFunction root_of(const Domain& d, std::vector<double> squares) {
    for (double& v : squares) v = std::sqrt(v);
    return GridFunction(d, std::move(squares));
}

}  // namespace

double cone_profile(double r) {
    r = std::fabs(r);
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double inner = std::exp(-1.0 / (2.0 - r));
    const double outer = std::exp(-1.0 / (r - 1.0));
    return inner / (inner + outer);
}

GridFunction conical_square(const GridFunction& f, const KernelField& field, const ConeConfig& cone, bool smoothed) {
    auto sums = cone_sums(f, field, cone, {smoothed ? Profile::Smooth : Profile::Narrow});
    return root_of(field.domain(), std::move(sums[0]));
}

ConeTriple cone_triple(const GridFunction& f, const KernelField& field, const ConeConfig& cone) {
    auto sums = cone_sums(f, field, cone, {Profile::Narrow, Profile::Smooth, Profile::Wide});
    const Domain& d = field.domain();
    return {root_of(d, std::move(sums[0])), root_of(d, std::move(sums[1])), root_of(d, std::move(sums[2]))};
}

GridFunction vertical_square(const GridFunction& f, const KernelField& field) {
    check_input(f, field);
    const Domain& d = field.domain();
    require(field.times().t_min >= 2.0 * d.h() * (1.0 - 1e-12), "cone finer than grid: t_min must be at least 2h");
    const Nodes nodes = select_nodes(field, 0.0, 0.0);
    std::vector<double> sums(d.n, 0.0);
    for (std::size_t i = 0; i < nodes.index.size(); ++i) {
        const auto q = field.apply(nodes.index[i], f.values);
        for (std::size_t x = 0; x < d.n; ++x) sums[x] += nodes.weight[i] * q[x] * q[x];
    }
    return root_of(d, std::move(sums));
}

GridFunction gstar_square(const GridFunction& f, const KernelField& field, const GStarConfig& cfg) {
    require(cfg.lambda > 2.0, "hypothesis λ>2 violated");
    check_cone(f, field, ConeConfig{});
    const Domain& d = field.domain();
    const Frame frame(d);
    const Nodes nodes = select_nodes(field, 0.0, 0.0);
    std::vector<double> sums(d.n, 0.0), sq(d.n);
    for (std::size_t i = 0; i < nodes.index.size(); ++i) {
        const std::size_t k = nodes.index[i];
        const double t = field.times().t[k];
        const auto q = field.apply(k, f.values);
        for (std::size_t y = 0; y < d.n; ++y) sq[y] = q[y] * q[y];
        const auto ext = frame.extend(sq);
        const auto table = frame.table([&](double r) { return std::pow(t / (t + r), cfg.lambda); });
        const double c = nodes.weight[i] * d.h() / t;
        for (std::size_t x = 0; x < d.n; ++x) {
            const Window w = frame.whole(x);
            sums[x] += c * simd::dot(frame.weights_at(table, x, w), ext.data() + w.lo, w.len);
        }
    }
    return root_of(d, std::move(sums));
}

GridFunction cone_series(const GridFunction& f, const KernelField& field, const GStarConfig& cfg) {
    require(cfg.lambda > 2.0, "hypothesis λ>2 violated");
    require(cfg.k_max >= 0, "cone series needs k_max >= 0");
    GridFunction total = GridFunction::zeros(field.domain());
    for (int k = 0; k <= cfg.k_max; ++k) {
        const auto s = conical_square(f, field, ConeConfig{std::exp2(k)});
        const double factor = std::exp2(-k * cfg.lambda / 2.0);
        for (std::size_t x = 0; x < total.size(); ++x) total[x] += factor * s[x];
    }
    return total;
}

CommutatorSpec make_commutator_spec(const GridFunction& b, const CubeScan& scan) {
    return {b, bmo_norm(b, scan)};
}

GridFunction commutator_square(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                               const CommutatorSpec& spec, bool smoothed) {
    check_cone(f, field, cone);
    require(spec.b.domain == field.domain(), "symbol and field live on different domains");
    const Domain& d = field.domain();
    const Frame frame(d);
    const Nodes nodes = select_nodes(field, cone.t_min, cone.t_max);

    // b(x) - b(y) is unchanged by a shift; the midrange keeps a constant symbol exactly zero.
    const auto [bmin, bmax] = std::minmax_element(spec.b.values.begin(), spec.b.values.end());
    const double centre = 0.5 * (*bmin + *bmax);
    std::vector<double> beta(d.n), beta_f(d.n);
    for (std::size_t y = 0; y < d.n; ++y) {
        beta[y] = spec.b[y] - centre;
        beta_f[y] = beta[y] * f[y];
    }

    std::vector<double> sums(d.n, 0.0), diff, weighted;
    for (std::size_t i = 0; i < nodes.index.size(); ++i) {
        const std::size_t k = nodes.index[i];
        const double t = field.times().t[k];
        const double aperture = cone.alpha * t;
        const auto plain = frame.extend(field.apply(k, f.values));
        const auto symbol = frame.extend(field.apply(k, beta_f));
        const auto table = profile_table(frame, smoothed ? Profile::Smooth : Profile::Narrow, aperture);
        const std::size_t radius = frame.radius(smoothed ? 2.0 * aperture : aperture);
        const double c = nodes.weight[i] * d.h() / t;
        for (std::size_t x = 0; x < d.n; ++x) {
            const Window w = frame.around(x, radius);
            const double* wt = frame.weights_at(table, x, w);
            diff.resize(w.len);
            weighted.resize(w.len);
            for (std::size_t j = 0; j < w.len; ++j) {
                diff[j] = beta[x] * plain[w.lo + j] - symbol[w.lo + j];
                weighted[j] = wt[j] * diff[j];
            }
            sums[x] += c * simd::dot(weighted.data(), diff.data(), w.len);
        }
    }
    return root_of(d, std::move(sums));
}

double bmo_norm(const GridFunction& b, const CubeScan& scan) {
    const Domain& d = b.domain;
    double best = 0.0;
    for_each_scanned_cube(d, scan, [&](const CellRange& q) {
        // Shifting by the first value keeps a constant symbol at exactly zero.
        const double base = b[q.lo];
        double sum = 0.0;
        for (std::size_t k = 0; k < q.len; ++k) sum += b[q.at(k, d.n)] - base;
        const double mean = sum / static_cast<double>(q.len);
        double dev = 0.0;
        for (std::size_t k = 0; k < q.len; ++k) dev += std::fabs(b[q.at(k, d.n)] - base - mean);
        best = std::max(best, dev / static_cast<double>(q.len));
    });
    return best;
}

ConeTail cone_tail(const GridFunction& f, const KernelField& field, const ConeConfig& cone) {
    check_cone(f, field, cone);
    const Domain& d = field.domain();
    const Nodes nodes = select_nodes(field, cone.t_min, cone.t_max);
    ConeTail tail;
    std::vector<double> delta(d.n, 0.0);
    delta[d.n / 2] = 1.0 / d.h();
    for (std::size_t k : nodes.index) {
        const auto column = field.apply(k, delta);
        double peak = 0.0;
        for (double v : column) peak = std::max(peak, std::fabs(v));
        tail.kernel_constant = std::max(tail.kernel_constant, field.times().t[k] * peak);
    }
    double l1 = 0.0;
    for (double v : f.values) l1 += std::fabs(v) * d.h();
    const double t_first = field.times().t[nodes.index.front()];
    const double t_last = field.times().t[nodes.index.back()];
    tail.large_t_bound = cone.alpha * tail.kernel_constant * tail.kernel_constant * l1 * l1 / (t_last * t_last);

    const auto total = conical_square(f, field, cone);
    ConeConfig low = cone;
    low.t_min = t_first;
    low.t_max = std::min(t_last, 2.0 * t_first * (1.0 - 1e-9));
    const auto first = conical_square(f, field, low);
    double all = 0.0, part = 0.0;
    for (std::size_t x = 0; x < d.n; ++x) {
        all += total[x] * total[x];
        part += first[x] * first[x];
    }
    tail.first_octave_share = all > 0.0 ? part / all : 0.0;
    return tail;
}

std::vector<std::string> square_metadata(const KernelField& field, const std::string& variant, double alpha,
                                         double lambda) {
    char buf[160];
    std::vector<std::string> lines;
    lines.push_back("operator=" + to_string(field.op().kind));
    lines.push_back("fluctuation=" + to_string(field.fluctuation()));
    lines.push_back("square=" + variant);
    std::snprintf(buf, sizeof buf, "alpha=%.17g", alpha);
    lines.emplace_back(buf);
    if (lambda > 0.0) {
        std::snprintf(buf, sizeof buf, "lambda=%.17g", lambda);
        lines.emplace_back(buf);
    }
    std::snprintf(buf, sizeof buf, "t_range=%.17g,%.17g", field.times().t.front(), field.times().t.back());
    lines.emplace_back(buf);
    return lines;
}

}  // namespace conelab
