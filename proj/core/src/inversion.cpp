#include "itomc/inversion.hpp"

#include "itomc/io.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace itomc {

void InversionConfig::validate() const {
    if (param_nx < 1 || param_ny < 1) throw std::invalid_argument("parameter grid must be at least 1x1");
    if (!(init > 0)) throw std::invalid_argument("initial guess must be positive");
    if (!(grad_tol > 0)) throw std::invalid_argument("grad_tol must be positive");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
    if (!(lambda0 > 0) || !(lambda_up > 1) || !(lambda_down > 1)) throw std::invalid_argument("bad damping settings");
    if (!(positivity_floor > 0)) throw std::invalid_argument("positivity_floor must be positive");
    if (reg_alpha < 0 || reg_beta < 0) throw std::invalid_argument("regularization weights must be non-negative");
    if (reg_beta > 0 && !regularizer) throw std::invalid_argument("reg_beta > 0 needs a regularizer");
    if (stagnation_window < 1) throw std::invalid_argument("stagnation_window must be >= 1");
}

MisfitTarget MisfitTarget::full(const Eigen::MatrixXd &data) {
    if (data.rows() != data.cols()) throw std::invalid_argument("target matrix must be square");
    if (!data.allFinite()) throw std::invalid_argument("full-matrix target must be complete and finite");
    MisfitTarget t;
    t.mode = Mode::full_matrix;
    t.data = data;
    t.weight = Eigen::MatrixXd::Ones(data.rows(), data.cols());
    return t;
}

MisfitTarget MisfitTarget::masked(const Eigen::MatrixXd &data, const SamplingMask &mask) {
    if (data.rows() != mask.n || data.cols() != mask.n) throw std::invalid_argument("target and mask sizes differ");
    MisfitTarget t;
    t.mode = Mode::masked_entries;
    t.data = Eigen::MatrixXd::Zero(mask.n, mask.n);
    t.weight = Eigen::MatrixXd::Zero(mask.n, mask.n);
    for (auto [i, j] : mask.entries) {
        if (!std::isfinite(data(i, j))) throw std::invalid_argument("non-finite observed value");
        t.data(i, j) = data(i, j);
        t.weight(i, j) = 1;
    }
    return t;
}

namespace {

Eigen::VectorXd weighted_residual(const Eigen::MatrixXd &dtn, const MisfitTarget &t) {
    const Eigen::MatrixXd r = t.weight.cwiseProduct(dtn - t.data);
    return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
}

void check_target(const MisfitTarget &t, const GridSpec &grid) {
    if (t.data.rows() != grid.boundary_count || t.data.cols() != grid.boundary_count ||
        t.weight.rows() != t.data.rows() || t.weight.cols() != t.data.cols())
        throw std::invalid_argument("target dimension does not match the grid boundary size");
}

struct Penalty {
    double value = 0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd curv;
};

Penalty penalty(const InversionConfig &cfg, const Eigen::VectorXd &a, const Eigen::VectorXd &a0) {
    const Eigen::Index p = a.size();
    Penalty out{0, Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p)};
    if (cfg.reg_alpha > 0) {
        out.value += cfg.reg_alpha * (a - a0).squaredNorm();
        out.grad += 2 * cfg.reg_alpha * (a - a0);
        out.curv.diagonal().array() += 2 * cfg.reg_alpha;
    }
    if (cfg.reg_beta > 0) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
        out.value += cfg.reg_beta * cfg.regularizer(a, g, c);
        out.grad += cfg.reg_beta * g;
        out.curv += cfg.reg_beta * c;
    }
    return out;
}

} // namespace

MisfitValue misfit(const ConductivityField &a, const MisfitTarget &target, const GridSpec &grid) {
    check_target(target, grid);
    const DtnJacobian J(grid, a);
    const Eigen::VectorXd r = weighted_residual(J.dtn(), target);
    return {r.squaredNorm(), 2.0 * J.matrix().transpose() * r};
}

InversionResult gauss_newton(const MisfitTarget &target, const InversionConfig &cfg, const GridSpec &grid,
                             const ConductivityField *initial) {
    cfg.validate();
    check_target(target, grid);
    const int nx = initial ? initial->nx() : cfg.param_nx, ny = initial ? initial->ny() : cfg.param_ny;
    ConductivityField a = initial ? *initial : ConductivityField::constant(nx, ny, cfg.init);
    a.check_compatible(grid);
    const Eigen::Index np = a.size();
    const Eigen::VectorXd a0 = cfg.prior ? *cfg.prior : a.values();
    if (a0.size() != np) throw std::invalid_argument("prior size does not match the parameter grid");

    InversionResult res;
    double lambda = cfg.lambda0;
    int stalls = 0;
    bool accepted_last = false;

    auto J = std::make_unique<DtnJacobian>(grid, a);
    Eigen::VectorXd r = weighted_residual(J->dtn(), target);
    Penalty pen = penalty(cfg, a.values(), a0);
    double f = r.squaredNorm() + pen.value;

    for (int it = 0;; ++it) {
        // chain rule for the log parameterization: d/dtheta = a * d/da
        Eigen::MatrixXd jm = J->matrix();
        const Eigen::VectorXd scale = cfg.log_param ? a.values() : Eigen::VectorXd::Ones(np);
        if (cfg.log_param) jm = jm * scale.asDiagonal();
        const Eigen::VectorXd g = 2.0 * (jm.transpose() * r) + scale.cwiseProduct(pen.grad);
        const double gnorm = g.norm();
        res.trace.push_back({it, f, gnorm, lambda, accepted_last});
        res.iterations = it;
        res.misfit = f;
        if (gnorm <= cfg.grad_tol) {
            res.converged = true;
            res.stop_reason = "gradient tolerance";
            break;
        }
        if (stalls >= cfg.stagnation_window) {
            res.stop_reason = "stagnation";
            break;
        }
        if (it >= cfg.max_iter) {
            res.stop_reason = "iteration limit";
            break;
        }
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(np, np);
        H.selfadjointView<Eigen::Lower>().rankUpdate(jm.transpose());
        H = H.selfadjointView<Eigen::Lower>();
        H += 0.5 * scale.asDiagonal() * pen.curv * scale.asDiagonal();
        const double dmax = std::max(H.diagonal().maxCoeff(), 1e-300);
        const Eigen::VectorXd rhs = -0.5 * g;

        bool accepted = false;
        while (lambda <= cfg.lambda_max) {
            Eigen::MatrixXd A = H;
            A.diagonal() += lambda * (H.diagonal().array() + 1e-12 * dmax).matrix();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
            Eigen::VectorXd step;
            if (ldlt.info() == Eigen::Success) step = ldlt.solve(rhs);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                lambda *= cfg.lambda_up;
                continue;
            }
            Eigen::VectorXd trial(np);
            if (cfg.log_param) trial = (a.values().array().log() + step.array()).exp();
            else trial = (a.values() + step).cwiseMax(cfg.positivity_floor);
            ConductivityField a_trial(nx, ny, trial);
            const Eigen::MatrixXd dtn = assemble_dtn(grid, a_trial).entries;
            const Eigen::VectorXd r_trial = weighted_residual(dtn, target);
            const Penalty pen_trial = penalty(cfg, trial, a0);
            const double f_trial = r_trial.squaredNorm() + pen_trial.value;
            if (std::isfinite(f_trial) && f_trial < f) {
                stalls = (f - f_trial) <= cfg.stagnation_tol * f ? stalls + 1 : 0;
                a = std::move(a_trial);
                f = f_trial;
                pen = pen_trial;
                lambda = std::max(lambda / cfg.lambda_down, 1e-300);
                accepted = true;
                break;
            }
            lambda *= cfg.lambda_up;
        }
        accepted_last = accepted;
        if (!accepted) {
            res.stop_reason = "damping limit";
            res.trace.push_back({it + 1, f, gnorm, lambda, false});
            res.iterations = it + 1;
            break;
        }
        J = std::make_unique<DtnJacobian>(grid, a);
        r = weighted_residual(J->dtn(), target);
    }
    res.field = a;
    return res;
}

void write_trace_csv(std::ostream &os, const std::vector<TraceRow> &trace) {
    os << "iter,misfit,grad_norm,lambda,accepted\n";
    for (const auto &t : trace)
        os << t.iter << ',' << format_double(t.misfit) << ',' << format_double(t.grad_norm) << ','
           << format_double(t.lambda) << ',' << t.accepted << '\n';
}

FieldDistance compare_reconstructions(const ConductivityField &a1, const ConductivityField &a2) {
    if (a1.nx() != a2.nx() || a1.ny() != a2.ny()) throw std::invalid_argument("fields live on different grids");
    const Eigen::VectorXd d = a1.values() - a2.values();
    return {d.norm() / a1.values().norm(), d.cwiseAbs().maxCoeff()};
}

} // namespace itomc
