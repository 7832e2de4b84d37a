#pragma once
// Conductivity reconstruction from DtN data by damped Gauss-Newton.

#include "itomc/grid_fem.hpp"
#include "itomc/sampling.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace itomc {

/// Optional extra penalty beta * R(a). Returns R(a) and writes its gradient and a
/// positive semidefinite curvature approximation.
using Regularizer = std::function<double(const Eigen::VectorXd &a, Eigen::VectorXd &grad, Eigen::MatrixXd &curv)>;

struct InversionConfig {
    int param_nx = 16, param_ny = 16;
    double init = 1.0;
    double grad_tol = 1e-9;
    int max_iter = 10000;
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double lambda_max = 1e16;
    double positivity_floor = 1e-3;
    double stagnation_tol = 1e-12; ///< relative misfit decrease counted as a stall
    int stagnation_window = 5;      ///< consecutive stalls before stopping
    bool log_param = false;         ///< step in log a instead of clamping
    double reg_alpha = 0;           ///< alpha * ||a - a0||^2
    double reg_beta = 0;            ///< beta * R(a), R from `regularizer`
    std::optional<Eigen::VectorXd> prior; ///< a0; defaults to the initial guess
    Regularizer regularizer;

    void validate() const;
};

struct MisfitTarget {
    enum class Mode { full_matrix, masked_entries };
    Mode mode = Mode::full_matrix;
    Eigen::MatrixXd data;
    Eigen::MatrixXd weight; ///< 0/1 indicator of compared entries

    static MisfitTarget full(const Eigen::MatrixXd &data);
    /// Compares only entries in the mask; values elsewhere are ignored.
    static MisfitTarget masked(const Eigen::MatrixXd &data, const SamplingMask &mask);
};

struct MisfitValue {
    double value = 0;
    Eigen::VectorXd gradient;
};

/// Sum of squared differences over compared entries, with its gradient.
MisfitValue misfit(const ConductivityField &a, const MisfitTarget &target, const GridSpec &grid);

struct TraceRow {
    int iter = 0;
    double misfit = 0, grad_norm = 0, lambda = 0;
    bool accepted = false;
};

struct InversionResult {
    ConductivityField field;
    std::vector<TraceRow> trace;
    int iterations = 0;
    double misfit = 0;
    bool converged = false; ///< gradient tolerance reached
    std::string stop_reason;
};

InversionResult gauss_newton(const MisfitTarget &target, const InversionConfig &cfg, const GridSpec &grid,
                             const ConductivityField *initial = nullptr);

void write_trace_csv(std::ostream &os, const std::vector<TraceRow> &trace);

struct FieldDistance {
    double rel_l2 = 0; ///< ||a1 - a2|| / ||a1||
    double linf = 0;
};
FieldDistance compare_reconstructions(const ConductivityField &a1, const ConductivityField &a2);

} // namespace itomc
