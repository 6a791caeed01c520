#pragma once
// Maximal operators over finite interval families.

#include "conelab/dyadic.hpp"
#include "conelab/grid.hpp"
#include "conelab/orlicz.hpp"

namespace conelab {

struct MaximalConfig {
    CubeFamily family = CubeFamily::AllIntervals;
    bool centered = false;      // intervals centered at the evaluation cell (all-intervals family only)
    std::size_t max_cells = 0;  // cap on interval length in cells; 0 means no cap
};

// sup over intervals Q containing x of <|f|^r>_Q^(1/r); r = 1 is M, r = p is M_p, r = delta is M_delta.
GridFunction hl_maximal(const GridFunction& f, const MaximalConfig& cfg = {}, double exponent = 1.0);
// Dyadic maximal function over one grid.
GridFunction dyadic_maximal(const GridFunction& f, const DyadicGrid& grid);
// sup over Q containing x of ||f||_{Phi,Q}. Power gauges reuse the closed form.
GridFunction orlicz_maximal(const GridFunction& f, const YoungFunction& phi, const MaximalConfig& cfg = {});
// sup over intervals centered at x of (1/w(Q)) int_Q |h| w.
GridFunction weighted_centered_maximal(const GridFunction& h, const GridFunction& w);
// sup over Q containing x of inf_c (fint_Q ||f|^delta - c|)^(1/delta).
GridFunction sharp_maximal(const GridFunction& f, double delta, const MaximalConfig& cfg = {});
// sup over dyadic Q with x in Q inside Q0 of omega_lambda(f;Q); zero outside Q0.
GridFunction local_sharp_maximal(const GridFunction& f, double lambda, const DyadicCube& root, const DyadicGrid& grid);

// Row callback: fill out[len - 1] with the value of CellRange{a, len} for len = 1..max_len.
using IntervalRowFn = std::function<void(std::size_t a, std::size_t max_len, std::vector<double>& out)>;
// Pointwise sup of interval values over every interval (capped length) containing each cell. O(N^2).
std::vector<double> sup_over_intervals(const Domain& d, std::size_t max_cells, const IntervalRowFn& row,
                                       const std::function<double(const CellRange&)>& whole);
// Same over the cubes of one family, with a per-cube value.
std::vector<double> sup_over_family(const Domain& d, const MaximalConfig& cfg,
                                    const std::function<double(const CellRange&)>& value);

}  // namespace conelab
