#include "conelab/orlicz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "conelab/error.hpp"

namespace conelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kE = 2.718281828459045235;

// log(e^a + e^b) without overflow.
double log_add_exp(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Golden-section maximization of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& fn, double a, double b) {
    const double ratio = 0.6180339887498949;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = fn(c);
    double fd = fn(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::fabs(a) + std::fabs(b)); ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = fn(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

struct ConjPoint {
    double log_value = -kInf;
    double log_argmax = -kInf;
};

// sup_s (s t - Phi(s)) evaluated in log coordinates so that huge t stay finite.
ConjPoint conjugate_point(const YoungFunction& parent, double lt) {
    auto ratio = [&](double ls) { return parent.log_value(ls) - ls; };  // log(Phi(s)/s), nondecreasing
    const double floor_l = -700.0;
    if (ratio(floor_l) >= lt) return {};
    double prev = std::max(lt, 0.0);
    double hi = prev + 1.0;
    int guard = 0;
    while (!(ratio(hi) > lt)) {
        const double r = ratio(hi);
        if (std::isnan(r) || ++guard > 60) throw NumericalError("gauge grows too fast for requested t");
        prev = hi;
        hi = 2.0 * hi + 1.0;
    }
    double lo = prev;
    if (!(ratio(lo) <= lt)) lo = floor_l;
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (ratio(mid) > lt ? hi : lo) = mid;
    }
    auto objective = [&](double ls) {
        const double r = ratio(ls) - lt;
        if (!(r < 0.0)) return -kInf;
        return ls + lt + std::log1p(-std::exp(r));
    };
    const auto [arg, val] = golden_max(objective, std::max(floor_l, lo - 100.0), lo);
    if (std::isnan(val)) throw NumericalError("gauge grows too fast for requested t");
    return {val, arg};
}

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss16() {
    static const GaussRule rule = [] {
        const int n = 16;
        GaussRule r;
        for (int i = 1; i <= n; ++i) {
            double x = std::cos(M_PI * (i - 0.25) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-16) break;
            }
            r.nodes.push_back(x);
            r.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
        }
        return r;
    }();
    return rule;
}

template <class F>
double gauss_panel(F&& fn, double a, double b) {
    const auto& rule = gauss16();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * fn(mid + half * rule.nodes[k]);
    return s * half;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

struct YoungFunction::Conjugate {
    YoungFunction parent;
    double l0 = 0.0;
    double step = 0.0;
    std::vector<double> logv;
    std::vector<double> slope;  // d log conj / d log t, from the maximizer
};

YoungFunction YoungFunction::power(double p, double coefficient) {
    require(p >= 1.0 && std::isfinite(p), "power gauge requires p >= 1");
    require(coefficient > 0.0, "power gauge coefficient must be positive");
    YoungFunction y;
    y.kind_ = GaugeKind::Power;
    y.p_ = p;
    y.coefficient_ = coefficient;
    return y;
}

YoungFunction YoungFunction::log_bump(double p, double delta) {
    require(p > 1.0, "log-bump requires p > 1");
    require(delta > 0.0, "log-bump requires delta > 0");
    YoungFunction y;
    y.kind_ = GaugeKind::LogBump;
    y.p_ = p;
    y.delta_ = delta;
    return y;
}

YoungFunction YoungFunction::loglog_bump(double p, double delta) {
    require(p > 1.0, "loglog-bump requires p > 1");
    require(delta > 0.0, "loglog-bump requires delta > 0");
    YoungFunction y;
    y.kind_ = GaugeKind::LogLogBump;
    y.p_ = p;
    y.delta_ = delta;
    return y;
}

YoungFunction YoungFunction::llogl() {
    YoungFunction y;
    y.kind_ = GaugeKind::LLogL;
    return y;
}

YoungFunction YoungFunction::expl() {
    YoungFunction y;
    y.kind_ = GaugeKind::ExpL;
    return y;
}

YoungFunction YoungFunction::commutator() {
    YoungFunction y;
    y.kind_ = GaugeKind::Commutator;
    return y;
}

YoungFunction YoungFunction::from_name(const std::string& name, double p, double delta) {
    if (name == "power") return power(p);
    if (name == "logbump" || name == "log-bump") return log_bump(p, delta);
    if (name == "loglog" || name == "loglog-bump") return loglog_bump(p, delta);
    if (name == "llogl" || name == "LlogL") return llogl();
    if (name == "expl" || name == "expL") return expl();
    if (name == "commutator") return commutator();
    throw PreconditionError("unknown Young function '" + name + "'");
}

std::string YoungFunction::name() const {
    switch (kind_) {
        case GaugeKind::Power:
            return coefficient_ == 1.0 ? "power(p=" + fmt(p_) + ")"
                                       : "power(p=" + fmt(p_) + ",c=" + fmt(coefficient_) + ")";
        case GaugeKind::LogBump: return "logbump(p=" + fmt(p_) + ",delta=" + fmt(delta_) + ")";
        case GaugeKind::LogLogBump: return "loglog(p=" + fmt(p_) + ",delta=" + fmt(delta_) + ")";
        case GaugeKind::LLogL: return "llogl";
        case GaugeKind::ExpL: return "expl";
        case GaugeKind::Commutator: return "commutator";
        case GaugeKind::Complementary: return "conj(" + conj_->parent.name() + ")";
    }
    return "?";
}

double YoungFunction::log_value(double lt) const {
    if (std::isnan(lt)) return lt;
    switch (kind_) {
        case GaugeKind::Power: return std::log(coefficient_) + p_ * lt;
        case GaugeKind::LogBump: return p_ * lt + (p_ - 1.0 + delta_) * std::log(log_add_exp(1.0, lt));
        case GaugeKind::LogLogBump:
            return p_ * lt + (p_ - 1.0) * std::log(log_add_exp(1.0, lt)) +
                   (p_ - 1.0 + delta_) * std::log(log_add_exp(kE, lt));
        case GaugeKind::LLogL: return lt + std::log(log_add_exp(1.0, lt));
        case GaugeKind::ExpL: {
            if (lt > 709.0) return kInf;
            const double t = std::exp(lt);
            return t < 30.0 ? std::log(std::expm1(t)) : t + std::log1p(-std::exp(-t));
        }
        case GaugeKind::Commutator: return lt + std::log1p(std::max(lt, 0.0));
        case GaugeKind::Complementary: {
            const auto& c = *conj_;
            const double u = (lt - c.l0) / c.step;
            if (u >= 0.0 && u < static_cast<double>(c.logv.size() - 1)) {
                const auto k = static_cast<std::size_t>(u);
                const double y0 = c.logv[k];
                const double y1 = c.logv[k + 1];
                if (std::isfinite(y0) && std::isfinite(y1)) {
                    const double s = u - static_cast<double>(k);
                    const double s2 = s * s;
                    const double s3 = s2 * s;
                    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * c.step * c.slope[k] +
                           (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * c.step * c.slope[k + 1];
                }
            }
            return conjugate_point(c.parent, lt).log_value;
        }
    }
    return kInf;
}

double YoungFunction::operator()(double t) const {
    if (!(t > 0.0)) return 0.0;
    if (kind_ == GaugeKind::Power) return coefficient_ * std::pow(t, p_);
    if (kind_ == GaugeKind::ExpL) return std::expm1(t);
    return std::exp(log_value(std::log(t)));
}

double YoungFunction::inverse(double y) const {
    if (!(y > 0.0)) return 0.0;
    if (kind_ == GaugeKind::Power) return std::pow(y / coefficient_, 1.0 / p_);
    const double ly = std::log(y);
    double lo = -1.0;
    double hi = 1.0;
    for (int g = 0; log_value(lo) >= ly; ++g) {
        require(g < 80, "gauge inverse: no preimage below the requested level");
        lo = 2.0 * lo - 1.0;
    }
    for (int g = 0; !(log_value(hi) >= ly); ++g) {
        if (g > 80) throw NumericalError("gauge inverse: level out of range");
        hi = 2.0 * hi + 1.0;
    }
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_value(mid) >= ly ? hi : lo) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

YoungFunction YoungFunction::complementary() const {
    if (kind_ == GaugeKind::Power) {
        require(p_ > 1.0, "the linear gauge has no finite complementary function");
        const double q = p_ / (p_ - 1.0);
        return power(q, (p_ - 1.0) * coefficient_ * std::pow(coefficient_ * p_, -q));
    }
    auto table = std::make_shared<Conjugate>();
    table->parent = *this;
    const double per_decade = 40.0;
    table->step = std::log(10.0) / per_decade;
    table->l0 = std::log(1e-6);
    const std::size_t count = static_cast<std::size_t>(12 * per_decade) + 1;
    table->logv.resize(count);
    table->slope.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double lt = table->l0 + table->step * static_cast<double>(k);
        const ConjPoint cp = conjugate_point(*this, lt);
        table->logv[k] = cp.log_value;
        // Envelope theorem: conj'(t) = s*(t).
        table->slope[k] = std::isfinite(cp.log_value) ? std::exp(lt + cp.log_argmax - cp.log_value) : 0.0;
    }
    YoungFunction y;
    y.kind_ = GaugeKind::Complementary;
    y.p_ = p_ > 1.0 ? p_ / (p_ - 1.0) : 1.0;
    y.delta_ = delta_;
    y.conj_ = std::move(table);
    return y;
}

LuxemburgResult luxemburg_solve(const std::vector<double>& samples, const YoungFunction& phi) {
    require(!samples.empty(), "empty cube");
    LuxemburgResult res;
    double top = 0.0;
    for (double v : samples) top = std::max(top, std::fabs(v));
    if (top == 0.0) return res;
    const double inv_len = 1.0 / static_cast<double>(samples.size());
    auto gauge_mean = [&](double log_lambda) {
        double s = 0.0;
        for (double v : samples) {
            if (v != 0.0) s += std::exp(phi.log_value(std::log(std::fabs(v)) - log_lambda));
        }
        return s * inv_len;
    };
    if (phi.kind() == GaugeKind::Power) {
        double s = 0.0;
        for (double v : samples) s += std::pow(std::fabs(v), phi.p());
        res.norm = std::pow(phi.coefficient() * s * inv_len, 1.0 / phi.p());
        res.residual = std::fabs(gauge_mean(std::log(res.norm)) - 1.0);
        return res;
    }
    double lo = std::log(top);
    double hi = lo;
    while (gauge_mean(hi) > 1.0) hi += 1.0;
    while (gauge_mean(lo) <= 1.0) lo -= 1.0;
    int it = 0;
    for (; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (gauge_mean(mid) > 1.0 ? lo : hi) = mid;
    }
    res.norm = std::exp(hi);
    res.residual = std::fabs(gauge_mean(hi) - 1.0);
    res.iterations = it;
    return res;
}

double luxemburg_norm(const GridFunction& f, const CellRange& q, const YoungFunction& phi) {
    require(q.len > 0, "empty cube");
    std::vector<double> v(q.len);
    for (std::size_t k = 0; k < q.len; ++k) v[k] = f[q.at(k, f.size())];
    return luxemburg_solve(v, phi).norm;
}

double luxemburg_norm(const GridFunction& f, const Cube& q, const YoungFunction& phi) {
    return luxemburg_norm(f, aligned_cells(f.domain, q), phi);
}

BpResult log_tail_integral(const std::function<double(double)>& log_integrand) {
    auto term = [&](double lt) {
        const double v = log_integrand(lt);
        if (std::isnan(v)) throw NumericalError("B_p integrand is not a number");
        return std::exp(v);
    };
    BpResult res;
    double sum = 0.0;
    // u = log t on [0, 1], then w = log u on [0, 1], then z = log log u outward.
    for (int k = 0; k < 16; ++k) sum += gauss_panel(term, k / 16.0, (k + 1) / 16.0);
    auto in_w = [&](double w) {
        const double u = std::exp(w);
        return term(u) * u;
    };
    for (int k = 0; k < 16; ++k) sum += gauss_panel(in_w, k / 16.0, (k + 1) / 16.0);
    auto in_z = [&](double z) {
        const double w = std::exp(z);
        const double u = std::exp(w);
        return term(u) * u * w;
    };
    // Beyond log t ~ 1e10 the log-space gauge loses absolute accuracy.
    const double z_max = std::log(std::log(1e10));
    const int per_unit = 32;
    const int panels = static_cast<int>(std::floor(z_max * per_unit));
    std::vector<double> contrib(panels);
    for (int k = 0; k < panels; ++k) {
        contrib[k] = gauss_panel(in_z, static_cast<double>(k) / per_unit, static_cast<double>(k + 1) / per_unit);
        sum += contrib[k];
        if (!std::isfinite(sum)) {
            res.finite = false;
            res.value = kInf;
            return res;
        }
    }
    double last = 0.0;
    double before = 0.0;
    for (int k = panels - per_unit; k < panels; ++k) last += contrib[k];
    for (int k = panels - 2 * per_unit; k < panels - per_unit; ++k) before += contrib[k];
    if (last <= 1e-12 * sum) {
        res.finite = true;
        res.value = sum;
        res.decay = before > 0.0 ? last / before : 0.0;
        return res;
    }
    const double rho = before > 0.0 ? last / before : kInf;
    res.decay = rho;
    if (rho < 0.9) {
        res.tail = last * rho / (1.0 - rho);
        res.value = sum + res.tail;
        res.finite = true;
    } else {
        res.finite = false;
        res.value = kInf;
    }
    return res;
}

BpResult bp_constant(const YoungFunction& phi, double p) {
    require(p > 1.0, "B_p requires p > 1");
    return log_tail_integral([&](double lt) { return phi.log_value(lt) - p * lt; });
}

BpResult bp_dual_integral(const YoungFunction& phi, double p) {
    require(p > 1.0, "B_p requires p > 1");
    const double q = p / (p - 1.0);
    const YoungFunction conj = phi.complementary();
    return log_tail_integral([&](double lt) { return (p - 1.0) * (q * lt - conj.log_value(lt)); });
}

HolderReport orlicz_holder_check(const GridFunction& f, const GridFunction& g, const CellRange& q,
                                 const YoungFunction& a) {
    HolderReport r;
    double s = 0.0;
    for (std::size_t k = 0; k < q.len; ++k) {
        const std::size_t i = q.at(k, f.size());
        s += std::fabs(f[i] * g[i]);
    }
    r.lhs = s / static_cast<double>(q.len);
    r.rhs = 2.0 * luxemburg_norm(f, q, a) * luxemburg_norm(g, q, a.complementary());
    return r;
}

HolderReport orlicz_holder_abc(const GridFunction& f, const GridFunction& g, const CellRange& q, const YoungFunction& a,
                               const YoungFunction& b, const YoungFunction& c) {
    HolderReport r;
    r.lhs = luxemburg_norm(f.times(g), q, c);
    r.rhs = luxemburg_norm(f, q, a) * luxemburg_norm(g, q, b);
    return r;
}

double inverse_product_constant(const YoungFunction& a, const YoungFunction& b, const YoungFunction& c, double t0,
                                double t1) {
    require(t0 > 0.0 && t1 > t0, "inverse_product_constant needs 0 < t0 < t1");
    double best = 0.0;
    const int points = 200;
    for (int k = 0; k <= points; ++k) {
        const double t = t0 * std::pow(t1 / t0, static_cast<double>(k) / points);
        best = std::max(best, a.inverse(t) * b.inverse(t) / c.inverse(t));
    }
    return best;
}

GaugeReport gauge_report(const YoungFunction& phi, double t0, double t1, int points) {
    GaugeReport r;
    const YoungFunction conj = phi.complementary();
    const YoungFunction back = conj.complementary();
    std::vector<double> ts(points);
    for (int k = 0; k < points; ++k) ts[k] = t0 * std::pow(t1 / t0, static_cast<double>(k) / (points - 1));
    r.young_max_excess = -kInf;
    for (double s : ts) {
        const double ps = phi(s);
        for (double t : ts) {
            const double st = s * t;
            r.young_max_excess = std::max(r.young_max_excess, (st - ps - conj(t)) / st);
        }
    }
    r.sandwich_min = kInf;
    r.sandwich_max = 0.0;
    r.young2_max = 0.0;
    for (double t : ts) {
        const double prod = phi.inverse(t) * conj.inverse(t) / t;
        r.sandwich_min = std::min(r.sandwich_min, prod);
        r.sandwich_max = std::max(r.sandwich_max, prod);
        const double pt = phi(t);
        r.young2_max = std::max(r.young2_max, conj(pt / t) / pt);
        r.involution_error = std::max(r.involution_error, std::fabs(back(t) - pt) / pt);
    }
    for (int k = 1; k + 1 < points; ++k) {
        const double a = phi(ts[k - 1]);
        const double b = phi(ts[k]);
        const double c = phi(ts[k + 1]);
        const double left = (b - a) / (ts[k] - ts[k - 1]);
        const double right = (c - b) / (ts[k + 1] - ts[k]);
        if (!(a < b && b < c) || right < left * (1.0 - 1e-9)) r.convex_increasing = false;
    }
    return r;
}

double preceq_constant(const YoungFunction& a, const YoungFunction& b, double t0, double t1) {
    require(t0 > 0.0 && t1 > t0, "preceq_constant needs 0 < t0 < t1");
    double best = 0.0;
    const int points = 200;
    for (int k = 0; k <= points; ++k) {
        const double t = t0 * std::pow(t1 / t0, static_cast<double>(k) / points);
        best = std::max(best, b.inverse(a(t)) / t);
    }
    return best;
}

}  // namespace conelab
