#include "conelab/semigroup.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "conelab/error.hpp"
#include "conelab/simd.hpp"

namespace conelab {

struct MatrixSpectrum {
    Domain domain;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
};

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kExpCut = 745.0;  // exp(-745) underflows to zero
constexpr int kImages = 10;        // 21 periodic images
constexpr std::size_t kMatrixCap = 512;

double periodic_offset(const Domain& d, double delta) {
    if (!d.periodic()) return delta;
    const double len = d.length();
    return delta - len * std::floor(delta / len + 0.5);
}

// Periodized value of an even (parity 1) or odd (parity -1) profile. Summing
// from |offset| keeps k(x,y) = parity * k(y,x) bit for bit.
template <class Fn>
double with_images(const Domain& d, double delta, int parity, Fn fn) {
    if (!d.periodic()) return fn(delta);
    const double base = periodic_offset(d, delta);
    const double a = std::fabs(base);
    if (parity < 0 && a == 0.5 * d.length()) return 0.0;  // antipode of an odd kernel
    double s = 0.0;
    for (int m = -kImages; m <= kImages; ++m) s += fn(a + m * d.length());
    return base < 0.0 && parity < 0 ? -s : s;
}

double gauss(double s, double delta) {
    const double e = delta * delta / (4.0 * s);
    return e > kExpCut ? 0.0 : std::exp(-e) / std::sqrt(4.0 * kPi * s);
}

// Coefficients of P_k with (-s d/ds)^k p_s = p_s P_k(u), u = delta^2 / (4s).
std::vector<double> power_polynomial(int k) {
    std::vector<double> p{1.0};
    for (int step = 0; step < k; ++step) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            next[i] += 0.5 * p[i];
            next[i + 1] -= p[i];
            next[i] += static_cast<double>(i) * p[i];  // u * d/du of u^i
        }
        p = std::move(next);
    }
    return p;
}

double polynomial_at(const std::vector<double>& c, double u) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
    return v;
}

// (1/P) sum over k in Z of psi(t |w_k|) cos(w_k delta), w_k = 2 pi k / P.
double mode_sum(const SpectralMultiplier& psi, double t, double delta, double period) {
    const double step = 2.0 * kPi / period;
    const auto k_max = static_cast<long long>(std::ceil(psi.cutoff() / (t * step))) + 1;
    const double theta = step * delta;
    const double c1 = std::cos(theta);
    double prev = 1.0, cur = c1;
    double s = 0.5 * psi(0.0);
    for (long long k = 1; k <= k_max; ++k) {
        s += psi(t * step * static_cast<double>(k)) * cur;
        const double next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
    }
    return 2.0 * s / period;
}

double line_period(const Domain& d, double t) { return 2.0 * d.length() + 64.0 * t; }

double spectral_laplacian(const SpectralMultiplier& psi, const Domain& d, double t, double delta) {
    if (d.periodic()) return mode_sum(psi, t, periodic_offset(d, delta), d.length());
    return mode_sum(psi, t, delta, line_period(d, t));
}

const MatrixSpectrum& spectrum_for(const OperatorSpec& op, const Domain& d) {
    require(op.spectrum != nullptr, "Schroedinger operator has no spectrum");
    require(op.spectrum->domain == d, "Schroedinger operator built on a different domain");
    return *op.spectrum;
}

// Entry (x, y) of U diag(m) U^T / h.
double matrix_entry(const MatrixSpectrum& sp, const std::function<double(double)>& m, std::size_t x, std::size_t y) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < sp.values.size(); ++j) {
        s += m(sp.values[j]) * sp.vectors(static_cast<Eigen::Index>(x), j) * sp.vectors(static_cast<Eigen::Index>(y), j);
    }
    return s / sp.domain.h();
}

// Row x of U diag(m) U^T / h.
std::vector<double> matrix_row(const MatrixSpectrum& sp, const std::function<double(double)>& m, std::size_t x) {
    const Eigen::Index n = sp.values.size();
    Eigen::VectorXd coeff(n);
    for (Eigen::Index j = 0; j < n; ++j) coeff[j] = m(sp.values[j]) * sp.vectors(static_cast<Eigen::Index>(x), j);
    const Eigen::VectorXd row = sp.vectors * coeff / sp.domain.h();
    return std::vector<double>(row.data(), row.data() + n);
}

double clamp_eigen(double lambda) { return std::max(lambda, 0.0); }

// Neighbour of cell i, or npos outside the Dirichlet line.
std::size_t neighbour(const Domain& d, std::size_t i, int dir) {
    if (d.periodic()) return (i + d.n + static_cast<std::size_t>(dir + 1) - 1) % d.n;
    if (dir < 0) return i == 0 ? static_cast<std::size_t>(-1) : i - 1;
    return i + 1 >= d.n ? static_cast<std::size_t>(-1) : i + 1;
}

}  // namespace

SpectralMultiplier::SpectralMultiplier(std::string name, std::function<double(double)> profile)
    : name_(std::move(name)), profile_(std::move(profile)) {
    double peak = 0.0;
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i <= 6000; ++i) {
        const double s = std::pow(10.0, -3.0 + 6.0 * i / 6000.0);
        const double v = std::fabs(profile_(s));
        peak = std::max(peak, v);
        samples.emplace_back(s, v);
    }
    require(peak > 0.0, "spectral profile vanishes identically");
    require(samples.back().second <= 1e-18 * peak, "spectral profile decays too slowly");
    for (const auto& [s, v] : samples) {
        if (v > 1e-18 * peak) cutoff_ = s;
    }
}

SpectralMultiplier SpectralMultiplier::gaussian_square() {
    return SpectralMultiplier("s2exp", [](double s) { return s * s * std::exp(-s * s); });
}

SpectralMultiplier SpectralMultiplier::gaussian_quartic() {
    return SpectralMultiplier("s4exp", [](double s) { return s * s * s * s * std::exp(-s * s); });
}

SpectralMultiplier SpectralMultiplier::bump() {
    return SpectralMultiplier("bump", [](double s) {
        if (s == 0.0) return 0.0;
        const double u = std::log2(std::fabs(s));
        if (std::fabs(u) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - u * u));
    });
}

SpectralMultiplier SpectralMultiplier::from_name(const std::string& name) {
    if (name == "s2exp") return gaussian_square();
    if (name == "s4exp") return gaussian_quartic();
    if (name == "bump") return bump();
    throw PreconditionError("unknown spectral profile: " + name);
}

double SpectralMultiplier::square_integral() const {
    const double lo = std::log(1e-8), hi = std::log(cutoff_);
    double peak = 0.0;
    for (int i = 0; i <= 200; ++i) peak = std::max(peak, std::fabs(profile_(std::exp(lo + (hi - lo) * i / 200.0))));
    if (std::fabs(profile_(1e-8)) > 1e-6 * peak) return std::numeric_limits<double>::infinity();
    const int steps = 20000;
    const double du = (hi - lo) / steps;
    double s = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double v = profile_(std::exp(lo + du * i));
        s += (i == 0 || i == steps ? 0.5 : 1.0) * v * v;
    }
    return s * du;
}

void require_even(const SpectralMultiplier& psi) {
    double peak = 0.0;
    for (int i = 1; i <= 64; ++i) peak = std::max(peak, std::fabs(psi(psi.cutoff() * i / 64.0)));
    for (int i = 1; i <= 64; ++i) {
        const double s = psi.cutoff() * i / 64.0;
        require(std::fabs(psi(s) - psi(-s)) <= 1e-14 * peak, "psi not even");
    }
}

std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Laplacian: return "laplacian";
        case OperatorKind::Schrodinger: return "schrodinger";
        case OperatorKind::Spectral: return "spectral";
    }
    return "laplacian";
}

OperatorKind parse_operator_kind(const std::string& text) {
    if (text == "laplacian") return OperatorKind::Laplacian;
    if (text == "schrodinger") return OperatorKind::Schrodinger;
    if (text == "spectral") return OperatorKind::Spectral;
    throw PreconditionError("unknown operator: " + text);
}

OperatorSpec OperatorSpec::laplacian() { return OperatorSpec{}; }

OperatorSpec OperatorSpec::schrodinger(const GridFunction& potential) {
    const Domain& d = potential.domain;
    require(d.n <= kMatrixCap, "Schroedinger operator needs N <= 512");
    for (double v : potential.values) require(v >= 0.0 && std::isfinite(v), "potential must be nonnegative");
    const auto n = static_cast<Eigen::Index>(d.n);
    const double inv_h2 = 1.0 / (d.h() * d.h());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 2.0 * inv_h2 + potential[static_cast<std::size_t>(i)];
        if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = -inv_h2;
    }
    if (d.periodic()) a(0, n - 1) = a(n - 1, 0) = -inv_h2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    auto sp = std::make_shared<MatrixSpectrum>();
    sp->domain = d;
    sp->vectors = solver.eigenvectors();
    sp->values = solver.eigenvalues();
    OperatorSpec op;
    op.kind = OperatorKind::Schrodinger;
    op.spectrum = std::move(sp);
    return op;
}

OperatorSpec OperatorSpec::spectral(const SpectralMultiplier& psi) {
    require_even(psi);
    OperatorSpec op;
    op.kind = OperatorKind::Spectral;
    op.psi = psi;
    return op;
}

double heat_kernel(const OperatorSpec& op, const Domain& d, double s, double x, double y) {
    return power_kernel(op, d, 0, s, x, y);
}

double power_kernel(const OperatorSpec& op, const Domain& d, int k, double s, double x, double y) {
    require(s > 0.0, "time must be positive");
    require(k >= 0, "power must be nonnegative");
    if (op.kind == OperatorKind::Schrodinger) {
        const auto& sp = spectrum_for(op, d);
        return matrix_entry(
            sp,
            [&](double lambda) {
                const double a = s * clamp_eigen(lambda);
                return std::pow(a, k) * std::exp(-a);
            },
            d.cell_of(x), d.cell_of(y));
    }
    const auto poly = power_polynomial(k);
    return with_images(d, x - y, 1, [&](double delta) {
        return gauss(s, delta) * polynomial_at(poly, delta * delta / (4.0 * s));
    });
}

double qt_kernel(const OperatorSpec& op, const Domain& d, double t, double x, double y) {
    require(t > 0.0, "time must be positive");
    if (op.kind == OperatorKind::Spectral) return spectral_kernel(op, op.psi, d, t, x, y);
    return power_kernel(op, d, 1, t * t, x, y);
}

double gradient_kernel(const OperatorSpec& op, const Domain& d, double t, double x, double y) {
    require(t > 0.0, "time must be positive");
    const double s = t * t;
    if (op.kind == OperatorKind::Schrodinger) {
        const auto& sp = spectrum_for(op, d);
        auto heat = [&](double lambda) { return std::exp(-s * clamp_eigen(lambda)); };
        const std::size_t xi = d.cell_of(x), yi = d.cell_of(y);
        const std::size_t up = neighbour(d, xi, 1), down = neighbour(d, xi, -1);
        const std::size_t npos = static_cast<std::size_t>(-1);
        const double a = up == npos ? 0.0 : matrix_entry(sp, heat, up, yi);
        const double b = down == npos ? 0.0 : matrix_entry(sp, heat, down, yi);
        return t * (a - b) / (2.0 * d.h());
    }
    return with_images(d, x - y, -1, [&](double delta) { return -delta / (2.0 * t) * gauss(s, delta); });
}

double spectral_kernel(const OperatorSpec& op, const SpectralMultiplier& psi, const Domain& d, double t, double x,
                       double y) {
    require(t > 0.0, "time must be positive");
    require_even(psi);
    if (op.kind == OperatorKind::Schrodinger) {
        const auto& sp = spectrum_for(op, d);
        return matrix_entry(
            sp, [&](double lambda) { return psi(t * std::sqrt(clamp_eigen(lambda))); }, d.cell_of(x), d.cell_of(y));
    }
    return spectral_laplacian(psi, d, t, x - y);
}

double TimeGrid::dlogt() const { return std::log(2.0) / static_cast<double>(per_octave); }

TimeGrid TimeGrid::make(double t_min, double t_max, int per_octave) {
    require(t_min > 0.0 && t_max >= t_min, "time grid needs 0 < t_min <= t_max");
    require(per_octave >= 1, "time grid needs at least one node per octave");
    TimeGrid g;
    g.t_min = t_min;
    g.t_max = t_max;
    g.per_octave = per_octave;
    for (int k = 0;; ++k) {
        const double t = t_min * std::exp2(static_cast<double>(k) / per_octave);
        if (t > t_max * (1.0 + 1e-12)) break;
        g.t.push_back(t);
    }
    return g;
}

TimeGrid default_time_grid(const Domain& d, int per_octave) {
    return TimeGrid::make(d.length() / 512.0, d.length(), per_octave);
}

std::string to_string(Fluctuation f) {
    switch (f) {
        case Fluctuation::Plain: return "plain";
        case Fluctuation::Gradient: return "gradient";
        case Fluctuation::Spectral: return "spectral";
    }
    return "plain";
}

Fluctuation parse_fluctuation(const std::string& text) {
    if (text == "plain") return Fluctuation::Plain;
    if (text == "gradient") return Fluctuation::Gradient;
    if (text == "spectral") return Fluctuation::Spectral;
    throw PreconditionError("unknown fluctuation: " + text);
}

KernelField::KernelField(const Domain& d, OperatorSpec op, Fluctuation kind, TimeGrid times)
    : domain_(d), op_(std::move(op)), kind_(kind), times_(std::move(times)) {
    require(!times_.t.empty(), "time grid is empty");
    require(times_.t_min >= 2.0 * d.h() * (1.0 - 1e-12), "cone finer than grid: t_min must be at least 2h");
    const bool spectral = kind_ == Fluctuation::Spectral || (kind_ == Fluctuation::Plain && op_.kind == OperatorKind::Spectral);
    if (spectral) require_even(op_.psi);
    if (op_.kind == OperatorKind::Schrodinger) {
        spectrum_for(op_, d);
        return;
    }
    const std::size_t n = d.n;
    const double h = d.h();
    for (double t : times_.t) {
        Toeplitz tp;
        tp.reversed.assign(2 * n - 1, 0.0);
        std::vector<double> half(n);
        for (std::size_t c = 0; c < n; ++c) {
            const double delta = static_cast<double>(c) * h;
            if (spectral) {
                half[c] = spectral_laplacian(op_.psi, d, t, delta);
            } else if (kind_ == Fluctuation::Gradient) {
                half[c] = gradient_kernel(op_, d, t, delta, 0.0);
            } else {
                half[c] = power_kernel(op_, d, 1, t * t, delta, 0.0);
            }
        }
        const double sign = (!spectral && kind_ == Fluctuation::Gradient) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < 2 * n - 1; ++j) {
            const long long c = static_cast<long long>(n) - 1 - static_cast<long long>(j);
            tp.reversed[j] = c >= 0 ? half[static_cast<std::size_t>(c)] : sign * half[static_cast<std::size_t>(-c)];
        }
        tp.radius = spectral ? n : static_cast<std::size_t>(std::ceil(std::sqrt(4.0 * kExpCut) * t / h)) + 2;
        toeplitz_.push_back(std::move(tp));
    }
}

double KernelField::multiplier(double t, double lambda) const {
    const double a = t * t * clamp_eigen(lambda);
    const bool spectral = kind_ == Fluctuation::Spectral;
    if (spectral) return op_.psi(t * std::sqrt(clamp_eigen(lambda)));
    if (kind_ == Fluctuation::Gradient) return std::exp(-a);
    return a * std::exp(-a);
}

std::vector<double> KernelField::apply(std::size_t k, const std::vector<double>& f) const {
    const std::size_t n = domain_.n;
    require(f.size() == n, "function size does not match the field");
    require(k < size(), "time index out of range");
    std::vector<double> out(n, 0.0);
    if (op_.kind == OperatorKind::Schrodinger) {
        const auto& sp = *op_.spectrum;
        const double t = times_.t[k];
        const Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd coeff = sp.vectors.transpose() * fv;
        for (Eigen::Index j = 0; j < coeff.size(); ++j) coeff[j] *= multiplier(t, sp.values[j]);
        const Eigen::VectorXd g = sp.vectors * coeff;
        if (kind_ != Fluctuation::Gradient) {
            for (std::size_t i = 0; i < n; ++i) out[i] = g[static_cast<Eigen::Index>(i)];
            return out;
        }
        const std::size_t npos = static_cast<std::size_t>(-1);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t up = neighbour(domain_, i, 1), down = neighbour(domain_, i, -1);
            const double a = up == npos ? 0.0 : g[static_cast<Eigen::Index>(up)];
            const double b = down == npos ? 0.0 : g[static_cast<Eigen::Index>(down)];
            out[i] = t * (a - b) / (2.0 * domain_.h());
        }
        return out;
    }
    const Toeplitz& tp = toeplitz_[k];
    // Extended input: zero padding on the line, periodic copies on the torus.
    std::vector<double> ext(3 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        ext[n + i] = f[i];
        if (domain_.periodic()) ext[i] = ext[2 * n + i] = f[i];
    }
    std::size_t below, count;
    if (!domain_.periodic() || 2 * tp.radius + 1 <= n) {
        const std::size_t r = std::min(tp.radius, n - 1);
        below = r;
        count = 2 * r + 1;
    } else {
        below = n / 2 - 1;
        count = n;
    }
    const double h = domain_.h();
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t z0 = y + n - below;
        out[y] = h * simd::dot(tp.reversed.data() + (z0 - y - 1), ext.data() + z0, count);
    }
    return out;
}

std::vector<std::vector<double>> KernelField::apply_all(const GridFunction& f) const {
    require(f.domain == domain_, "function and field live on different domains");
    std::vector<std::vector<double>> rows;
    rows.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) rows.push_back(apply(k, f.values));
    return rows;
}

double KernelField::kernel(std::size_t k, std::size_t x, std::size_t y) const {
    require(k < size(), "time index out of range");
    const std::size_t n = domain_.n;
    if (op_.kind == OperatorKind::Schrodinger) {
        std::vector<double> e(n, 0.0);
        e[y] = 1.0 / domain_.h();
        return apply(k, e)[x];
    }
    const long long diff = static_cast<long long>(x) - static_cast<long long>(y);
    return toeplitz_[k].reversed[static_cast<std::size_t>(static_cast<long long>(n) - 1 - diff)];
}

void KernelField::write_csv(std::ostream& out, std::size_t stride) const {
    require(stride >= 1, "stride must be positive");
    out << "t,x,y,value\n";
    char buf[128];
    for (std::size_t k = 0; k < size(); ++k) {
        for (std::size_t x = 0; x < domain_.n; x += stride) {
            for (std::size_t y = 0; y < domain_.n; y += stride) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", times_.t[k], domain_.x(x), domain_.x(y),
                              kernel(k, x, y));
                out << buf;
            }
        }
    }
}

KernelBoundReport kernel_bound_check(const OperatorSpec& op, const Domain& d, const BoundCheckConfig& cfg) {
    require(cfg.c > 0.0, "Gaussian exponent constant must be positive");
    require(cfg.s_points >= 1, "need at least one sample time");
    const double s_min = cfg.s_min > 0.0 ? cfg.s_min : d.h() * d.h();
    require(cfg.s_max >= s_min, "s_max below s_min");
    const std::size_t stride = cfg.x_stride > 0 ? cfg.x_stride : std::max<std::size_t>(1, d.n / 16);
    KernelBoundReport rep;
    rep.c = cfg.c;
    const bool matrix = op.kind == OperatorKind::Schrodinger;
    for (int i = 0; i < cfg.s_points; ++i) {
        const double s = cfg.s_points == 1 ? s_min
                                           : s_min * std::pow(cfg.s_max / s_min, static_cast<double>(i) / (cfg.s_points - 1));
        const double rs = std::sqrt(s);
        for (std::size_t x = 0; x < d.n; x += stride) {
            std::vector<double> heat(d.n), first(d.n);
            if (matrix) {
                const auto& sp = spectrum_for(op, d);
                heat = matrix_row(sp, [&](double l) { return std::exp(-s * clamp_eigen(l)); }, x);
                first = matrix_row(
                    sp,
                    [&](double l) {
                        const double a = s * clamp_eigen(l);
                        return a * std::exp(-a);
                    },
                    x);
            } else {
                for (std::size_t y = 0; y < d.n; ++y) {
                    heat[y] = heat_kernel(op, d, s, d.x(x), d.x(y));
                    first[y] = power_kernel(op, d, 1, s, d.x(x), d.x(y));
                }
            }
            double peak_heat = 0.0, peak_first = 0.0;
            for (std::size_t y = 0; y < d.n; ++y) {
                peak_heat = std::max(peak_heat, std::fabs(heat[y]));
                peak_first = std::max(peak_first, std::fabs(first[y]));
            }
            for (std::size_t y = 0; y < d.n; ++y) {
                const double dist = std::fabs(periodic_offset(d, d.x(x) - d.x(y)));
                ++rep.samples;
                if (std::fabs(heat[y]) > cfg.noise_floor * peak_heat) {
                    const double log_ratio = std::log(std::fabs(heat[y])) + 0.5 * std::log(s) + dist * dist / (cfg.c * s);
                    const double ratio = std::exp(std::min(log_ratio, 700.0));
                    rep.gaussian_C = std::max(rep.gaussian_C, ratio);
                    if (cfg.expected_C > 0.0 && ratio > cfg.expected_C * (1.0 + 1e-9)) ++rep.violations;
                }
                if (std::fabs(first[y]) > cfg.noise_floor * peak_first) {
                    const double base = std::fabs(first[y]) * rs;
                    const double grow = 1.0 + dist / rs;
                    rep.poly_C_half = std::max(rep.poly_C_half, base * std::pow(grow, 1.5));
                    rep.poly_C_one = std::max(rep.poly_C_one, base * grow * grow);
                }
            }
        }
    }
    return rep;
}

double spectral_decay_constant(const KernelField& field, int order) {
    const Domain& d = field.domain();
    double best = 0.0;
    const std::size_t x = d.n / 2;
    for (std::size_t k = 0; k < field.size(); ++k) {
        const double t = field.times().t[k];
        for (std::size_t y = 0; y < d.n; ++y) {
            const double dist = std::fabs(periodic_offset(d, d.x(x) - d.x(y)));
            best = std::max(best, std::fabs(field.kernel(k, x, y)) * t * std::pow(1.0 + dist / t, order));
        }
    }
    return best;
}

}  // namespace conelab
