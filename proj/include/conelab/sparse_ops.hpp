#pragma once
// Sparse operators over dyadic families and the constructive domination of
// the conical square function by three sparse square operators.

#include <json.hpp>
#include <vector>

#include "conelab/dyadic.hpp"
#include "conelab/grid.hpp"
#include "conelab/square.hpp"

namespace conelab {

// Cells of 2^j Q: same centre, 2^j times the nominal side, rounded outward to
// whole cells and clipped to the domain (the whole circle on the torus).
CellRange dilate(const Domain& d, const DyadicCube& q, int j, bool* clipped = nullptr);

// Average of |f| over a cell range, summed in cell order.
double abs_average(const GridFunction& f, const CellRange& q);

// A^2_S f = (sum_Q <|f|>_Q^2 1_Q)^(1/2)
GridFunction sparse_square(const GridFunction& f, const SparseFamily& family);
// A_S(f, g) = sum_Q <|f|>_Q <|g|>_{2Q} 1_Q
GridFunction sparse_bilinear(const GridFunction& f, const GridFunction& g, const SparseFamily& family);
// T_{S,j}(f, g) = sum_Q <|f|>_{2^j Q} <|g|>_{2^j Q} 1_Q
GridFunction dilated_bilinear(const GridFunction& f, const GridFunction& g, const SparseFamily& family, int j);
// T^2_{S,j} f = T_{S,j}(f, f)^(1/2), the squared-average form.
GridFunction dilated_square(const GridFunction& f, const SparseFamily& family, int j);

struct DominationConfig {
    double delta = 0.5;             // decay 2^(-j delta) of the dilated averages
    double series_tolerance = 1e-6;  // stop once a term is below this fraction of the running sum
};

struct DominationCertificate {
    double alpha = 1.0;
    int dimension = 1;
    double delta = 0.5;
    std::vector<SparseFamily> families;  // one per shifted grid
    SparseFamily oscillation_family;     // stopping cubes of S~^2 on the standard grid
    GridFunction numerator;              // S_alpha f
    GridFunction smooth;                 // S~_alpha f
    GridFunction wide;                   // S_2alpha f
    GridFunction denominator;            // sum_j A^2_{S_j} f
    GridFunction ratio;                  // numerator / denominator, 0 where both vanish
    double c_dom = 0.0;                  // sup of the ratio
    double taa_constant = 0.0;           // sup of the dilated series over sum_j A^2_{S_j}(f)^2
    int max_dilation = 0;                // largest j kept in any series
    std::size_t clipped_dilations = 0;   // dilations cut by the domain boundary
    std::size_t candidate_cubes = 0;     // three-grid cubes before sparsification

    nlohmann::json to_json() const;
};

// Oscillation sparse family of S~^2_alpha f, dilated averages absorbed into
// the minimal three-grid cubes, principal-cube sparsification on each grid.
DominationCertificate dominate(const GridFunction& f, const KernelField& field, const ConeConfig& cone,
                               const DominationConfig& cfg = {});

}  // namespace conelab
