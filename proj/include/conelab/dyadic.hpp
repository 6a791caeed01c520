#pragma once
// Dyadic and one-third-shifted grids, sparse families, medians, decreasing
// rearrangements, local mean oscillation, the Calderon-Zygmund decomposition
// and the median-oscillation sparse construction.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conelab/grid.hpp"

namespace conelab {

struct DyadicCube {
    int level = 0;
    long long start = 0;  // first nominal cell, before clipping or wrapping
    CellRange cells;      // the part inside the domain

    bool operator==(const DyadicCube& o) const { return level == o.level && start == o.start; }
    bool operator<(const DyadicCube& o) const { return level != o.level ? level < o.level : start < o.start; }
};

// Level k cubes have 2^(K-k) cells. Grid j is the standard grid translated by
// round(j n / 3) cells; the fixed translate gives relative shifts of one or
// two thirds of the sidelength at every level.
class DyadicGrid {
public:
    DyadicGrid(const Domain& domain, int shift);

    const Domain& domain() const { return domain_; }
    int shift() const { return shift_; }
    std::size_t offset() const { return offset_; }
    int max_level() const { return domain_.levels(); }
    std::size_t side_cells(int level) const { return domain_.n >> level; }

    std::vector<DyadicCube> level(int k) const;
    std::vector<DyadicCube> roots() const { return level(0); }
    std::vector<DyadicCube> children(const DyadicCube& q) const;
    std::optional<DyadicCube> parent(const DyadicCube& q) const;
    DyadicCube containing(std::size_t cell, int level) const;
    // True when clipping removed part of the nominal cube.
    bool clipped(const DyadicCube& q) const { return q.cells.len != side_cells(q.level); }
    std::vector<DyadicCube> all_cubes() const;

private:
    std::optional<DyadicCube> make(int level, long long start) const;

    Domain domain_;
    int shift_;
    std::size_t offset_;
};

struct SparseMember {
    DyadicCube cube;
    std::vector<CellRange> selected;  // E_Q as non-wrapping cell runs
};

struct SparseFamily {
    Domain domain;
    int grid_shift = 0;
    double eta = 0.5;
    std::vector<SparseMember> members;

    // E_Q inside Q, |E_Q| >= eta |Q|, pairwise disjoint. Exact cell arithmetic.
    bool verify(std::string* why = nullptr) const;
    nlohmann::json to_json() const;
    static SparseFamily from_json(const nlohmann::json& j, const Domain& domain);
};

// Order statistics on the samples of f over a cell range.
double median(const GridFunction& f, const CellRange& q);
double median(const GridFunction& f, const Cube& q);
double rearrangement(const GridFunction& f, const CellRange& q, double t);
double rearrangement(const GridFunction& f, const Cube& q, double t);
double local_oscillation(const GridFunction& f, const CellRange& q, double lambda);
double local_oscillation(const GridFunction& f, const Cube& q, double lambda);

// Sample-level primitives shared with the maximal module.
double median_of_samples(std::vector<double> samples);
// k-th largest |sample| with k = ceil(t / h) in cell units.
double rearrangement_of_samples(std::vector<double> samples, double t_cells);
double oscillation_of_samples(std::vector<double> samples, double lambda);

struct CZDecomposition {
    double lambda = 0.0;
    std::vector<DyadicCube> cubes;
    std::vector<double> cube_means;  // <f>_{Q_j}
    GridFunction good;
    GridFunction bad;       // rounded f - g
    GridFunction bad_tail;  // exact rounding residual: f = g + bad + bad_tail
    std::vector<char> omega;
    bool roots_selected = false;  // some root exceeded lambda; the 2 lambda bound then needs no parent

    // Bad part b_j restricted to its cube (rounded values).
    std::vector<double> bad_piece(std::size_t j) const;
};

CZDecomposition cz_decompose(const GridFunction& f, double lambda, const DyadicGrid& grid);

struct CZReport {
    bool reconstruction_exact = true;  // f = g + b with no rounding, cellwise
    bool good_bounded = true;          // |g| <= 2 lambda
    bool averages_exceed = true;       // <|f|>_{Q_j} > lambda
    bool supports_ok = true;           // supp b_j in Q_j, disjoint cubes
    double max_mean_bad = 0.0;         // max_j |fint_{Q_j} b_j|
    bool ok(double mean_tol = 1e-12) const {
        return reconstruction_exact && good_bounded && averages_exceed && supports_ok && max_mean_bad <= mean_tol;
    }
};
CZReport check_cz(const GridFunction& f, const CZDecomposition& cz, const DyadicGrid& grid);

// True when the real-number sum of the terms is exactly zero.
bool exact_sum_is_zero(const std::vector<double>& terms);

struct MedianSparseResult {
    SparseFamily family;
    std::vector<double> oscillations;  // omega_{1/8}(f;Q) per member
    double root_median = 0.0;
    std::vector<double> bound;  // 2 sum_Q omega(f;Q) 1_Q per cell
    double max_violation = 0.0;  // max over cells of |f - m_f(Q0)| - bound, clipped at 0
};

// Stopping-time construction over D(Q0): 1/2-sparse family S(Q0) with
// |f - m_f(Q0)| <= 2 sum_{Q in S} omega_{1/8}(f;Q) 1_Q.
MedianSparseResult median_oscillation_sparse(const GridFunction& f, const DyadicCube& root, const DyadicGrid& grid);

// max over cubes Q0 of sum_{Q subset Q0} a_Q / w(Q0).
double carleson_packing(const std::map<DyadicCube, double>& a, const GridFunction& w, const DyadicGrid& grid);

// Families of intervals used as "all cubes" by maximal operators and weight constants.
enum class CubeFamily { AllIntervals, Dyadic, ThreeGrid };
std::string to_string(CubeFamily family);
CubeFamily parse_cube_family(const std::string& text);

// Visits every cube of the family once (duplicates across shifted grids are
// visited once per grid).
void for_each_cube(const Domain& domain, CubeFamily family, const std::function<void(const CellRange&)>& visit);

}  // namespace conelab
