#pragma once
// Square functions over a KernelField: conical (sharp and smoothed cones),
// vertical, the Poisson-weighted g*, the commutator with a symbol b, and the
// BMO norm of the symbol.
//
// All space-time sums use the field's log-spaced times with trapezoid weights
// in log t. The cone sums of one x and t run over a window whose start is a
// multiple of four in a fixed frame, so every cell lands in the same SIMD lane
// whatever the aperture. Termwise ordered weights then give exactly ordered
// results, which is what makes S_a <= S~_a <= S_2a and aperture monotonicity
// hold bit for bit.

#include <string>
#include <vector>

#include "conelab/grid.hpp"
#include "conelab/semigroup.hpp"
#include "conelab/weights.hpp"

namespace conelab {

// Smooth radial cutoff: 1 on [0, 1], 0 from 2 on, decreasing in between.
double cone_profile(double r);

struct ConeConfig {
    double alpha = 1.0;  // aperture, at least 1
    double t_min = 0.0;  // 0 takes the field's first time
    double t_max = 0.0;  // 0 takes the field's last time
};

// S_a, S~_a and S_2a from one pass with a shared window.
struct ConeTriple {
    GridFunction narrow;
    GridFunction smooth;
    GridFunction wide;
};

GridFunction conical_square(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                            bool smoothed = false);
ConeTriple cone_triple(const GridFunction& f, const KernelField& field, const ConeConfig& cone);

// g: per x, (sum_t |Q_t f(x)|^2 dt/t)^(1/2).
GridFunction vertical_square(const GridFunction& f, const KernelField& field);

struct GStarConfig {
    double lambda = 3.0;  // must exceed 2
    int k_max = 6;        // apertures 2^0 .. 2^k_max in the cone series
};
GridFunction gstar_square(const GridFunction& f, const KernelField& field, const GStarConfig& cfg = {});
// sum_{k <= k_max} 2^(-k lambda / 2) S_{2^k} f, the cone series that dominates g*.
GridFunction cone_series(const GridFunction& f, const KernelField& field, const GStarConfig& cfg = {});

struct CommutatorSpec {
    GridFunction b;
    double bmo = 0.0;  // filled by make_commutator_spec
};
CommutatorSpec make_commutator_spec(const GridFunction& b, const CubeScan& scan = {});

// C_b(S_a) f through b(x) Q_t f - Q_t(b f), with b recentred at its midrange.
GridFunction commutator_square(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                               const CommutatorSpec& spec, bool smoothed = false);

// sup over the scanned cubes of the mean of |b - <b>_Q| on Q.
double bmo_norm(const GridFunction& b, const CubeScan& scan = {});

// What the truncated t-range leaves out. large_t_bound bounds the squared
// cone mass past t_max by alpha C^2 ||f||_1^2 / t_max^2, with C = sup_t t |K_t|;
// first_octave_share is the fraction of sum_x S(x)^2 coming from the lowest
// octave, which should be small when the fine scales are resolved.
struct ConeTail {
    double kernel_constant = 0.0;
    double large_t_bound = 0.0;
    double first_octave_share = 0.0;
};
ConeTail cone_tail(const GridFunction& f, const KernelField& field, const ConeConfig& cone);

// "# key=value" lines for CSV output of a square function.
std::vector<std::string> square_metadata(const KernelField& field, const std::string& variant, double alpha,
                                         double lambda = 0.0);

}  // namespace conelab
