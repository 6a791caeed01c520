#pragma once
// Weight-class constants, two-weight bump constants, Coifman-Rochberg
// generators and the Rubio de Francia iteration.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "conelab/dyadic.hpp"
#include "conelab/grid.hpp"
#include "conelab/maximal.hpp"
#include "conelab/orlicz.hpp"

namespace conelab {

// Which cubes a supremum runs over. max_cells = 0 means no length cap.
struct CubeScan {
    CubeFamily family = CubeFamily::AllIntervals;
    std::size_t max_cells = 0;
};

// Visits every cube of the scan.
void for_each_scanned_cube(const Domain& d, const CubeScan& scan, const std::function<void(const CellRange&)>& visit);

// sup_Q <w>_Q <w^(1/(1-p))>_Q^(p-1)
double ap_constant(const Weight& w, double p, const CubeScan& scan = {});
// sup_Q <w>_Q / min_Q w
double a1_constant(const Weight& w, const CubeScan& scan = {});
// sup_Q max_Q w / <w>_Q
double rh_infinity_constant(const Weight& w, const CubeScan& scan = {});
// sup_Q (1/w(Q)) int_Q M(w 1_Q)
double ainfty_hp_constant(const Weight& w, const CubeScan& scan = {});
// sup_Q <w>_Q exp(<log w^-1>_Q)
double ainfty_exp_constant(const Weight& w, const CubeScan& scan = {});
// sup over Q and E subset Q of (|E|/|Q|) (w(Q)/w(E))^(1/p), exact on the grid.
double apR_constant(const Weight& w, double p, const CubeScan& scan = {});

struct WeightConstants {
    double p = 2.0;
    double ap = 0.0;
    double a1 = 0.0;
    double ainfty_hp = 0.0;
    double ainfty_exp = 0.0;
    double apR = 0.0;
    double rh_infinity = 0.0;
    CubeScan scan;
};
WeightConstants weight_constants(const Weight& w, double p, const CubeScan& scan = {});

struct BumpConstants {
    double p = 2.0;
    double double_bump = 0.0;     // sup ||u^(1/p)||_A ||v^(-1/p)||_B
    double separated_a = 0.0;     // sup ||u^(1/p)||_A ||v^(-1/p)||_p'
    double separated_b = 0.0;     // sup ||u^(1/p)||_p ||v^(-1/p)||_B
    double two_weight_ap = 0.0;   // sup ||u^(1/p)||_p ||v^(-1/p)||_p'
    double split_norm = 0.0;      // ||(u,v)||_{A,B,p}: separated_b for p <= 2, A applied to u^(2/p) above
    BpResult a_bar_dual;          // conj(A) against p'
    BpResult a_bar_half;          // conj(A) against (p/2)', used when p > 2
    BpResult b_bar;               // conj(B) against p
    double bound = 0.0;           // N_p, infinite when a required B_p integral diverges
    bool hypothesis_violated = false;
};
BumpConstants bump_constants(const Weight& u, const Weight& v, const YoungFunction& a, const YoungFunction& b,
                             double p, const CubeScan& scan = {});

enum class RdFVariant { Maximal, Tu };

struct RdFConfig {
    double r = 2.0;
    int k_max = 30;
    // Operator norm used in the denominators; 0 means measure it on test functions.
    double operator_norm = 0.0;
    MaximalConfig maximal;
};

struct RdFResult {
    GridFunction value;
    double operator_norm = 0.0;  // ||M||_{L^r'} or K_0 actually used
    double last_term = 0.0;      // sup norm of the first omitted term
    double tail_bound = 0.0;     // geometric bound on the sup norm of the omitted tail
    double decay = 0.0;          // largest observed ratio of successive term sup norms
    int terms = 0;
};

// Measured sup of ||M g||_{r'} / ||g||_{r'} over h, its iterates and interval indicators.
double measure_maximal_norm(const GridFunction& h, double r, const MaximalConfig& cfg = {});
// 1.1 times the measured sup of ||T_u g||_{L^{r',1}(uv)} / ||g||_{L^{r',1}(uv)} on the same test set.
double measure_tu_norm(const GridFunction& h, const Weight& u, const Weight& v, double r,
                       const MaximalConfig& cfg = {});
// T_u g = M(g u) / u.
GridFunction tu_operator(const GridFunction& g, const Weight& u, const MaximalConfig& cfg = {});

// Sum over k <= k_max of M^k h / (2 ||M||)^k.
RdFResult rubio_de_francia(const GridFunction& h, const RdFConfig& cfg);
// Sum over j <= k_max of T_u^j h / (2 K_0)^j; v only enters the measured K_0.
RdFResult rubio_de_francia_tu(const GridFunction& h, const Weight& u, const Weight& v, const RdFConfig& cfg);

struct GeneratedWeight {
    Weight weight;
    double constant = 0.0;  // [.]_{A_1} for the positive power, RH_infinity for the negative one
};

// (M_Phi sigma)^delta with its A_1 constant.
GeneratedWeight coifman_rochberg_generate(const GridFunction& sigma, double delta, const YoungFunction& phi,
                                          const CubeScan& scan = {});
// (M_Phi sigma)^(-lambda) with its RH_infinity constant.
GeneratedWeight coifman_rochberg_reverse(const GridFunction& sigma, double lambda, const YoungFunction& phi,
                                         const CubeScan& scan = {});

// Named weights: "constant", "two-level [a b]", "power a", "cr delta", "random-lognormal seed", "spike".
Weight make_weight(const Domain& d, const std::string& spec);
// The eight default corpus weights with their names.
std::vector<std::pair<std::string, Weight>> default_weight_corpus(const Domain& d, std::uint64_t seed = 42);

}  // namespace conelab
