#pragma once
// Steady radiative transfer on the unit square: discrete ordinates with an
// upwind (step) finite-volume sweep, and the albedo (inflow-to-outflow) matrix.

#include "itomc/completion.hpp"

#include <Eigen/Dense>
#include <Eigen/LU>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace itomc {

/// v . grad f = (sigma_s / Kn) (<f> - f), with <f> the direction average.
struct RteProblem {
    Eigen::MatrixXd sigma_s; ///< n_space x n_space, entry (i, j) is the cell at x index i, y index j
    double knudsen = 1.0;
    int n_space = 8;
    int n_angles = 16; ///< multiple of 4 so that no ordinate is tangent to a side

    static RteProblem homogeneous(int n_space, int n_angles, double knudsen, double sigma = 1.0);
    void validate() const;
};

/// Index bookkeeping for the boundary phase space. Boundary faces are numbered
/// counterclockwise from the corner (0,0) (bottom, right, top, left); on each face the
/// n_angles/2 incoming (outgoing) ordinates follow in angular order starting next to
/// the face tangent. Index = face * (n_angles/2) + k.
class PhaseSpace {
  public:
    PhaseSpace(int n_space, int n_angles);

    int n_space() const { return n_; }
    int n_angles() const { return m_; }
    int faces() const { return 4 * n_; }
    int size() const { return 2 * n_ * m_; } ///< inflow (and outflow) dimension

    int side(int face) const { return face / n_; } ///< 0 bottom, 1 right, 2 top, 3 left
    std::array<int, 2> cell(int face) const;       ///< boundary cell behind a face
    std::array<double, 2> normal(int face) const;  ///< outward unit normal
    std::array<double, 2> face_center(int face) const;
    std::array<double, 2> velocity(int ordinate) const;

    int inflow_ordinate(int face, int k) const;
    int outflow_ordinate(int face, int k) const;
    int inflow_index(int face, int ordinate) const;  ///< -1 if not incoming there
    int outflow_index(int face, int ordinate) const; ///< -1 if not outgoing there
    /// |v . n| of an inflow / outflow index.
    double inflow_cosine(int idx) const;
    double outflow_cosine(int idx) const;

  private:
    int n_, m_;
};

struct RteSolution {
    Eigen::VectorXd outflow;     ///< indexed like PhaseSpace outflow indices
    Eigen::VectorXd scalar_flux; ///< direction average per cell, i + n*j
    int sweeps = 0;              ///< source-iteration sweeps performed
    bool accelerated = false;    ///< finished with the direct scalar-flux solve
    double residual = 0;         ///< relative fixed-point residual of the scalar flux
};

struct RteSolverOptions {
    double tol = 1e-10;
    int max_source_iterations = 2000;
    /// Switch to the direct solve when the observed contraction predicts more sweeps than this.
    int predicted_sweep_budget = 2000;
};

class RteSolver {
  public:
    explicit RteSolver(RteProblem problem, RteSolverOptions opt = {});

    const RteProblem &problem() const { return p_; }
    const PhaseSpace &phase_space() const { return ps_; }

    /// `inflow` is indexed like PhaseSpace inflow indices (intensity values).
    RteSolution solve(const Eigen::VectorXd &inflow) const;

    /// One upwind sweep for ordinate m: source per cell plus incoming values on the
    /// faces crossed by the characteristic (bc_x per row j, bc_y per column i).
    Eigen::VectorXd sweep(int m, const Eigen::VectorXd &source, const Eigen::VectorXd &bc_x,
                          const Eigen::VectorXd &bc_y) const;

    /// Dense (I - K) factorization, K = sum_m w_m L_m^{-1} diag(sigma_s / Kn); built on demand.
    const Eigen::PartialPivLU<Eigen::MatrixXd> &scalar_flux_operator() const;

  private:
    void boundary_terms(const Eigen::VectorXd &inflow, int m, Eigen::VectorXd &bcx, Eigen::VectorXd &bcy) const;
    void collect_outflow(int m, const Eigen::VectorXd &f, Eigen::VectorXd &out) const;
    Eigen::VectorXd apply_k(const Eigen::VectorXd &rho) const;

    RteProblem p_;
    RteSolverOptions opt_;
    PhaseSpace ps_;
    Eigen::VectorXd st_; // sigma_s / Kn per cell
    mutable std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

/// Outflow-by-inflow matrix in flux units: entry (o, i) is the outgoing particle flux
/// through o per unit incoming flux through i, so columns sum to one in a
/// purely scattering medium.
struct AlbedoMatrix {
    Eigen::MatrixXd entries;
    int n_space = 0, n_angles = 0;
    /// (face, ordinate) per inflow column and per outflow row
    std::vector<std::array<int, 2>> inflow_nodes, outflow_nodes;
};

AlbedoMatrix assemble_albedo(const RteProblem &problem, const RteSolverOptions &opt = {});

/// JSON description of the ordinates and the grouping convention.
std::string albedo_sidecar_json(const AlbedoMatrix &a);

/// Five-point finite-volume solve of -Laplace(rho) = 0 on the cell grid with Dirichlet
/// data g at boundary face centres; reference for the diffusive limit.
Eigen::VectorXd diffusion_limit(int n_space, const std::function<double(double, double)> &g);

/// Refinement level k uses n_space = 2^k and n_angles = 2^(k+1) (albedo side 2^(2k+2)).
RteProblem rte_refinement(int k, double knudsen, double sigma = 1.0);

/// Success ratios for the off-diagonal albedo block rows [0, n/4) x cols [n/2, 3n/4)
/// across refinement levels.
std::vector<SweepCell> rte_success_sweep(const std::vector<double> &ps, const std::vector<int> &levels, int trials,
                                         double knudsen, double success_tol, const CompletionConfig &cfg,
                                         std::uint64_t seed);

} // namespace itomc
