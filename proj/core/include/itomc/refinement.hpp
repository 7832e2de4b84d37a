#pragma once
// Mesh-refinement consistency of the discrete DtN map, and Steklov eigenvalues.

#include "itomc/grid_fem.hpp"

#include <functional>
#include <vector>

namespace itomc {

struct RefinementOptions {
    int test_modes = 4;    ///< boundary data cos/sin(2 pi k s / 4), k = 1..test_modes
    int output_modes = 16; ///< Fourier modes |m| <= output_modes of the Neumann output
};

struct RefinementRow {
    int coarse = 0, fine = 0;
    double discrepancy = 0;
};

/// For consecutive levels, compares the Neumann outputs of both DtN matrices on a fixed
/// trigonometric test family. Outputs are compared through their Fourier coefficients
/// (sum of nodal fluxes against e^{-2 pi i m s / 4}) weighted by (1+|m|)^{-1/2}; the
/// reported number is the maximum over the family.
std::vector<RefinementRow> refinement_consistency(const std::function<double(double, double)> &a,
                                                  const std::vector<int> &levels, const RefinementOptions &opt = {});
/// Same, with a fixed pixel field (its resolution must divide 2^level for every level).
std::vector<RefinementRow> refinement_consistency(const ConductivityField &a, const std::vector<int> &levels,
                                                  const RefinementOptions &opt = {});

/// Weighted Fourier coefficients (real, imaginary interleaved for m = -K..K) of a nodal flux vector.
Eigen::VectorXd weighted_flux_spectrum(const GridSpec &grid, const Eigen::VectorXd &flux, int modes);

/// Smallest `count` eigenvalues of Lambda phi = sigma M_b phi (M_b the boundary mass matrix).
Eigen::VectorXd steklov_eigenvalues(const GridSpec &grid, const Eigen::MatrixXd &dtn, int count);

/// First nonzero Steklov eigenvalue of the Laplacian on the unit square, from
/// separation of variables: sigma = 2 t tanh t with tan t tanh t = 1.
double steklov_square_first();

} // namespace itomc
