#pragma once
// Generators, their heat and fluctuation kernels, spectral multipliers and the
// kernel bound checks. Times come in two flavours: heat_kernel and
// power_kernel take semigroup time s; the fluctuation kernels take the cone
// time t and evaluate at s = t^2.

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "conelab/grid.hpp"

namespace conelab {

// Even profile psi applied as psi(t sqrt(L)).
class SpectralMultiplier {
public:
    SpectralMultiplier(std::string name, std::function<double(double)> profile);
    // s^2 e^(-s^2): reproduces t^2 L e^(-t^2 L).
    static SpectralMultiplier gaussian_square();
    // s^4 e^(-s^2)
    static SpectralMultiplier gaussian_quartic();
    // Smooth bump supported in [1/2, 2], peak 1 at s = 1.
    static SpectralMultiplier bump();
    // Names: s2exp, s4exp, bump.
    static SpectralMultiplier from_name(const std::string& name);

    const std::string& name() const { return name_; }
    double operator()(double s) const { return profile_(s); }
    // Beyond this argument |psi| stays below 1e-18 of its peak.
    double cutoff() const { return cutoff_; }
    // int_0^inf psi(s)^2 ds / s by quadrature in log s.
    double square_integral() const;

private:
    std::string name_;
    std::function<double(double)> profile_;
    double cutoff_ = 0.0;
};

enum class OperatorKind { Laplacian, Schrodinger, Spectral };
std::string to_string(OperatorKind kind);
OperatorKind parse_operator_kind(const std::string& text);

// Dense eigendecomposition of the discretized Schroedinger operator.
struct MatrixSpectrum;

struct OperatorSpec {
    OperatorKind kind = OperatorKind::Laplacian;
    int order = 2;  // m; every concrete operator here has m = 2
    SpectralMultiplier psi = SpectralMultiplier::gaussian_square();
    std::shared_ptr<const MatrixSpectrum> spectrum;  // Schroedinger only

    static OperatorSpec laplacian();
    // -d^2/dx^2 + V by second differences: Dirichlet on the line, periodic on the torus. N <= 512.
    static OperatorSpec schrodinger(const GridFunction& potential);
    static OperatorSpec spectral(const SpectralMultiplier& psi);
};

// Kernel of e^{-sL} between two points (grid cells for the matrix path).
double heat_kernel(const OperatorSpec& op, const Domain& d, double s, double x, double y);
// Kernel of (sL)^k e^{-sL}.
double power_kernel(const OperatorSpec& op, const Domain& d, int k, double s, double x, double y);
// Kernel of t^2 L e^{-t^2 L}.
double qt_kernel(const OperatorSpec& op, const Domain& d, double t, double x, double y);
// Kernel of t D e^{-t^2 L}, D = d/dx acting on the first variable.
double gradient_kernel(const OperatorSpec& op, const Domain& d, double t, double x, double y);
// Kernel of psi(t sqrt(L)).
double spectral_kernel(const OperatorSpec& op, const SpectralMultiplier& psi, const Domain& d, double t, double x,
                       double y);
// Throws "psi not even" unless psi(-s) = psi(s) on a sample set.
void require_even(const SpectralMultiplier& psi);

// Log-spaced cone times t_k = t_min 2^(k / per_octave) up to t_max.
struct TimeGrid {
    double t_min = 0.0;
    double t_max = 0.0;
    int per_octave = 16;
    std::vector<double> t;

    double dlogt() const;  // spacing in log t, the quadrature weight for dt/t
    static TimeGrid make(double t_min, double t_max, int per_octave = 16);
};
// [length / 512, length].
TimeGrid default_time_grid(const Domain& d, int per_octave = 16);

enum class Fluctuation { Plain, Gradient, Spectral };
std::string to_string(Fluctuation f);
Fluctuation parse_fluctuation(const std::string& text);

// Per-time fluctuation operators on one grid: Plain is t^2 L e^{-t^2 L}
// (psi(t sqrt L) for a spectral operator), Gradient is t D e^{-t^2 L},
// Spectral is psi(t sqrt L) for any base operator.
class KernelField {
public:
    KernelField(const Domain& d, OperatorSpec op, Fluctuation kind, TimeGrid times);

    const Domain& domain() const { return domain_; }
    const OperatorSpec& op() const { return op_; }
    Fluctuation fluctuation() const { return kind_; }
    const TimeGrid& times() const { return times_; }
    std::size_t size() const { return times_.t.size(); }

    // Q_t f on every cell for time node k.
    std::vector<double> apply(std::size_t k, const std::vector<double>& f) const;
    // One row per time node.
    std::vector<std::vector<double>> apply_all(const GridFunction& f) const;
    // Kernel between cells x and y at time node k.
    double kernel(std::size_t k, std::size_t x, std::size_t y) const;
    // "t,x,y,value" rows for every stride-th cell pair.
    void write_csv(std::ostream& out, std::size_t stride = 1) const;

private:
    struct Toeplitz {
        std::vector<double> reversed;  // reversed[j] = K((N - 1 - j) cells)
        std::size_t radius = 0;        // cells beyond this carry no mass
    };
    double multiplier(double t, double lambda) const;

    Domain domain_;
    OperatorSpec op_;
    Fluctuation kind_;
    TimeGrid times_;
    std::vector<Toeplitz> toeplitz_;  // empty on the matrix path
};

struct BoundCheckConfig {
    double c = 4.0;          // Gaussian exponent constant of the bound
    double s_min = 0.0;      // 0 means h^2
    double s_max = 1.0;
    int s_points = 16;
    std::size_t x_stride = 0;  // 0 picks about 16 rows
    double expected_C = 0.0;   // when positive, samples above expected_C times the bound are violations
    double noise_floor = 1e-12;  // relative to the kernel peak; smaller entries are rounding noise on the matrix path
};

struct KernelBoundReport {
    double c = 4.0;
    double gaussian_C = 0.0;   // sup |p_s| s^(1/2) exp(d^2 / (c s))
    double poly_C_half = 0.0;  // sup |p_{1,s}| s^(1/2) (1 + d / s^(1/2))^(3/2)
    double poly_C_one = 0.0;   // same with exponent 2
    std::size_t samples = 0;
    std::size_t violations = 0;
};
KernelBoundReport kernel_bound_check(const OperatorSpec& op, const Domain& d, const BoundCheckConfig& cfg = {});

// sup over time nodes and cell pairs of |kernel| t (1 + |x-y| / t)^order.
double spectral_decay_constant(const KernelField& field, int order);

}  // namespace conelab
