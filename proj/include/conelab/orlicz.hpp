#pragma once
// Young functions, complementary gauges, Luxemburg norms, the B_p integral
// and Orlicz Hoelder checks.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "conelab/grid.hpp"

namespace conelab {

enum class GaugeKind { Power, LogBump, LogLogBump, LLogL, ExpL, Commutator, Complementary };

class YoungFunction {
public:
    // c t^p
    static YoungFunction power(double p, double coefficient = 1.0);
    // t^p log(e+t)^(p-1+delta)
    static YoungFunction log_bump(double p, double delta);
    // t^p log(e+t)^(p-1) loglog(e^e+t)^(p-1+delta)
    static YoungFunction loglog_bump(double p, double delta);
    // t log(e+t)
    static YoungFunction llogl();
    // e^t - 1
    static YoungFunction expl();
    // t (1 + log+ t)
    static YoungFunction commutator();
    // Names: power, logbump, loglog, llogl, expl, commutator.
    static YoungFunction from_name(const std::string& name, double p = 2.0, double delta = 1.0);

    GaugeKind kind() const { return kind_; }
    double p() const { return p_; }
    double delta() const { return delta_; }
    double coefficient() const { return coefficient_; }
    std::string name() const;

    double operator()(double t) const;
    // log Phi(e^L); -infinity where Phi vanishes. Stays finite for huge L.
    double log_value(double log_t) const;
    double inverse(double y) const;

    // Legendre conjugate. Closed form for power gauges, numerical otherwise.
    YoungFunction complementary() const;

private:
    struct Conjugate;
    YoungFunction() = default;

    GaugeKind kind_ = GaugeKind::Power;
    double p_ = 1.0;
    double delta_ = 0.0;
    double coefficient_ = 1.0;
    std::shared_ptr<const Conjugate> conj_;
};

struct LuxemburgResult {
    double norm = 0.0;
    double residual = 0.0;  // |fint Phi(|f|/norm) - 1|, 0 for f = 0
    int iterations = 0;
};

LuxemburgResult luxemburg_solve(const std::vector<double>& samples, const YoungFunction& phi);
double luxemburg_norm(const GridFunction& f, const CellRange& q, const YoungFunction& phi);
double luxemburg_norm(const GridFunction& f, const Cube& q, const YoungFunction& phi);

struct BpResult {
    bool finite = false;
    double value = 0.0;  // integral over [1, T_max] plus the extrapolated tail
    double tail = 0.0;   // extrapolated part
    double decay = 0.0;  // last measured contraction factor of the outer panels
};

// int_1^inf Phi(t) t^(-p) dt/t.
BpResult bp_constant(const YoungFunction& phi, double p);
// int_1^inf (t^p' / conj(Phi)(t))^(p-1) dt/t, the dual form of the same condition.
BpResult bp_dual_integral(const YoungFunction& phi, double p);
// int_1^inf exp(h(log t)) dt/t for an integrand supplied in log form.
BpResult log_tail_integral(const std::function<double(double)>& log_integrand);

struct HolderReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const { return lhs <= rhs; }
};

// fint_Q |fg| against 2 ||f||_{A,Q} ||g||_{conj A,Q}.
HolderReport orlicz_holder_check(const GridFunction& f, const GridFunction& g, const CellRange& q,
                                 const YoungFunction& a);
// ||fg||_{C,Q} against ||f||_{A,Q} ||g||_{B,Q}; the ratio is the measured c_2.
HolderReport orlicz_holder_abc(const GridFunction& f, const GridFunction& g, const CellRange& q, const YoungFunction& a,
                               const YoungFunction& b, const YoungFunction& c);
// sup over a log grid in [t0, t1] of A^-1(t) B^-1(t) / C^-1(t).
double inverse_product_constant(const YoungFunction& a, const YoungFunction& b, const YoungFunction& c, double t0,
                                double t1);

// Pointwise gauge checks over log-spaced grids.
struct GaugeReport {
    double young_max_excess = 0.0;  // max of st - Phi(s) - conj(t), should be <= 0
    double sandwich_min = 0.0;      // min over t of Phi^-1(t) conj^-1(t) / t, should be >= 1
    double sandwich_max = 0.0;      // max of the same ratio, should be <= 2
    double young2_max = 0.0;        // max of conj(Phi(t)/t) / Phi(t), should be <= 1
    double involution_error = 0.0;  // max relative |conj(conj) - Phi|
    bool convex_increasing = true;
};
GaugeReport gauge_report(const YoungFunction& phi, double t0 = 1e-3, double t1 = 1e3, int points = 100);

// Smallest c on the grid with A(t) <= B(c t) for t in [t0, t1].
double preceq_constant(const YoungFunction& a, const YoungFunction& b, double t0, double t1);

}  // namespace conelab
