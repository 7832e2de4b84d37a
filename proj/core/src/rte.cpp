#include "itomc/rte.hpp"

#include "itomc/hpartition.hpp"

#include <json.hpp>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace itomc {

RteProblem RteProblem::homogeneous(int n_space, int n_angles, double knudsen, double sigma) {
    RteProblem p;
    p.n_space = n_space;
    p.n_angles = n_angles;
    p.knudsen = knudsen;
    p.sigma_s = Eigen::MatrixXd::Constant(n_space, n_space, sigma);
    return p;
}

void RteProblem::validate() const {
    if (n_space < 1) throw std::invalid_argument("n_space must be >= 1");
    if (n_angles < 4 || n_angles % 4 != 0) throw std::invalid_argument("n_angles must be a positive multiple of 4");
    if (!(knudsen > 0) || !std::isfinite(knudsen)) throw std::invalid_argument("Knudsen number must be positive");
    if (sigma_s.rows() != n_space || sigma_s.cols() != n_space)
        throw std::invalid_argument("sigma_s must be n_space x n_space");
    if (!sigma_s.allFinite() || sigma_s.minCoeff() < 0) throw std::invalid_argument("sigma_s must be finite and >= 0");
}

PhaseSpace::PhaseSpace(int n_space, int n_angles) : n_(n_space), m_(n_angles) {}

std::array<int, 2> PhaseSpace::cell(int face) const {
    const int t = face % n_;
    switch (side(face)) {
    case 0: return {t, 0};
    case 1: return {n_ - 1, t};
    case 2: return {n_ - 1 - t, n_ - 1};
    default: return {0, n_ - 1 - t};
    }
}

std::array<double, 2> PhaseSpace::normal(int face) const {
    switch (side(face)) {
    case 0: return {0, -1};
    case 1: return {1, 0};
    case 2: return {0, 1};
    default: return {-1, 0};
    }
}

std::array<double, 2> PhaseSpace::face_center(int face) const {
    const double h = 1.0 / n_;
    auto [i, j] = cell(face);
    switch (side(face)) {
    case 0: return {(i + 0.5) * h, 0};
    case 1: return {1, (j + 0.5) * h};
    case 2: return {(i + 0.5) * h, 1};
    default: return {0, (j + 0.5) * h};
    }
}

std::array<double, 2> PhaseSpace::velocity(int m) const {
    const double th = 2 * std::numbers::pi * (m + 0.5) / m_;
    return {std::cos(th), std::sin(th)};
}

int PhaseSpace::inflow_ordinate(int face, int k) const { return (side(face) * m_ / 4 + k) % m_; }
int PhaseSpace::outflow_ordinate(int face, int k) const { return (side(face) * m_ / 4 + m_ / 2 + k) % m_; }

int PhaseSpace::inflow_index(int face, int m) const {
    const int k = ((m - side(face) * m_ / 4) % m_ + m_) % m_;
    return k < m_ / 2 ? face * (m_ / 2) + k : -1;
}

int PhaseSpace::outflow_index(int face, int m) const {
    const int k = ((m - side(face) * m_ / 4 - m_ / 2) % m_ + 2 * m_) % m_;
    return k < m_ / 2 ? face * (m_ / 2) + k : -1;
}

double PhaseSpace::inflow_cosine(int idx) const {
    const int face = idx / (m_ / 2);
    const auto v = velocity(inflow_ordinate(face, idx % (m_ / 2)));
    const auto n = normal(face);
    return std::abs(v[0] * n[0] + v[1] * n[1]);
}

double PhaseSpace::outflow_cosine(int idx) const {
    const int face = idx / (m_ / 2);
    const auto v = velocity(outflow_ordinate(face, idx % (m_ / 2)));
    const auto n = normal(face);
    return std::abs(v[0] * n[0] + v[1] * n[1]);
}

RteSolver::RteSolver(RteProblem problem, RteSolverOptions opt)
    : p_(std::move(problem)), opt_(opt), ps_(p_.n_space, p_.n_angles) {
    p_.validate();
    const int n = p_.n_space;
    st_.resize(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) st_[i + n * j] = p_.sigma_s(i, j) / p_.knudsen;
}

Eigen::VectorXd RteSolver::sweep(int m, const Eigen::VectorXd &source, const Eigen::VectorXd &bc_x,
                                 const Eigen::VectorXd &bc_y) const {
    const int n = p_.n_space;
    const auto v = ps_.velocity(m);
    const double ax = std::abs(v[0]) * n, ay = std::abs(v[1]) * n;
    const int di = v[0] > 0 ? 1 : -1, dj = v[1] > 0 ? 1 : -1;
    const int i0 = di > 0 ? 0 : n - 1, j0 = dj > 0 ? 0 : n - 1;
    Eigen::VectorXd f(n * n);
    for (int jj = 0, j = j0; jj < n; ++jj, j += dj)
        for (int ii = 0, i = i0; ii < n; ++ii, i += di) {
            const double fx = ii ? f[(i - di) + n * j] : bc_x[j];
            const double fy = jj ? f[i + n * (j - dj)] : bc_y[i];
            const int c = i + n * j;
            f[c] = (source[c] + ax * fx + ay * fy) / (ax + ay + st_[c]);
        }
    return f;
}

void RteSolver::boundary_terms(const Eigen::VectorXd &inflow, int m, Eigen::VectorXd &bcx, Eigen::VectorXd &bcy) const {
    const int n = p_.n_space;
    const auto v = ps_.velocity(m);
    bcx.resize(n);
    bcy.resize(n);
    for (int t = 0; t < n; ++t) {
        const int fx = v[0] > 0 ? 3 * n + (n - 1 - t) : n + t;     // left or right face of row t
        const int fy = v[1] > 0 ? t : 2 * n + (n - 1 - t);         // bottom or top face of column t
        bcx[t] = inflow[ps_.inflow_index(fx, m)];
        bcy[t] = inflow[ps_.inflow_index(fy, m)];
    }
}

void RteSolver::collect_outflow(int m, const Eigen::VectorXd &f, Eigen::VectorXd &out) const {
    const int n = p_.n_space;
    const auto v = ps_.velocity(m);
    for (int t = 0; t < n; ++t) {
        if (v[0] > 0) out[ps_.outflow_index(n + t, m)] = f[(n - 1) + n * t];
        else out[ps_.outflow_index(3 * n + (n - 1 - t), m)] = f[0 + n * t];
        if (v[1] > 0) out[ps_.outflow_index(2 * n + (n - 1 - t), m)] = f[t + n * (n - 1)];
        else out[ps_.outflow_index(t, m)] = f[t];
    }
}

Eigen::VectorXd RteSolver::apply_k(const Eigen::VectorXd &rho) const {
    const int n = p_.n_space, M = p_.n_angles;
    const Eigen::VectorXd src = st_.cwiseProduct(rho);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n * n);
    for (int m = 0; m < M; ++m) out += sweep(m, src, zero, zero) / M;
    return out;
}

const Eigen::PartialPivLU<Eigen::MatrixXd> &RteSolver::scalar_flux_operator() const {
    if (!lu_) {
        const int nc = p_.n_space * p_.n_space;
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nc, nc);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nc);
        for (int c = 0; c < nc; ++c) {
            e[c] = 1;
            a.col(c) -= apply_k(e);
            e[c] = 0;
        }
        lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(a);
    }
    return *lu_;
}

RteSolution RteSolver::solve(const Eigen::VectorXd &inflow) const {
    if (inflow.size() != ps_.size()) throw std::invalid_argument("inflow vector has the wrong length");
    const int n = p_.n_space, M = p_.n_angles;
    Eigen::VectorXd bcx, bcy;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n * n);

    // uncollided part
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n * n);
    for (int m = 0; m < M; ++m) {
        boundary_terms(inflow, m, bcx, bcy);
        q += sweep(m, zero, bcx, bcy) / M;
    }

    RteSolution sol;
    Eigen::VectorXd rho = q;
    double prev_delta = -1;
    bool done = st_.maxCoeff() == 0;
    for (int it = 0; !done && it < opt_.max_source_iterations; ++it) {
        const Eigen::VectorXd next = apply_k(rho) + q;
        ++sol.sweeps;
        const double delta = (next - rho).norm(), scale = std::max(next.norm(), 1e-300);
        rho = next;
        if (delta <= opt_.tol * scale) {
            done = true;
            break;
        }
        if (prev_delta > 0 && it >= 5) {
            const double rate = delta / prev_delta;
            const double remaining = rate < 1 ? std::log(opt_.tol * scale / delta) / std::log(rate) : 1e300;
            if (remaining > opt_.predicted_sweep_budget) break;
        }
        prev_delta = delta;
    }
    if (!done) {
        rho = scalar_flux_operator().solve(q);
        sol.accelerated = true;
    }
    sol.residual = (rho - apply_k(rho) - q).norm() / std::max(rho.norm(), 1e-300);
    if (!(sol.residual <= 1e3 * opt_.tol))
        throw std::runtime_error("transport solve did not reach the requested tolerance (residual " +
                                 std::to_string(sol.residual) + ")");

    sol.scalar_flux = rho;
    sol.outflow = Eigen::VectorXd::Zero(ps_.size());
    const Eigen::VectorXd src = st_.cwiseProduct(rho);
    for (int m = 0; m < M; ++m) {
        boundary_terms(inflow, m, bcx, bcy);
        collect_outflow(m, sweep(m, src, bcx, bcy), sol.outflow);
    }
    return sol;
}

AlbedoMatrix assemble_albedo(const RteProblem &problem, const RteSolverOptions &opt) {
    RteSolver solver(problem, opt);
    const auto &ps = solver.phase_space();
    const int n = problem.n_space, M = problem.n_angles, dim = ps.size(), nc = n * n;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nc);

    // uncollided flux for every inflow basis vector
    Eigen::MatrixXd q(nc, dim);
    std::vector<Eigen::VectorXd> direct(dim);
    Eigen::VectorXd bcx(n), bcy(n);
    for (int col = 0; col < dim; ++col) {
        const int face = col / (M / 2), m = ps.inflow_ordinate(face, col % (M / 2));
        bcx.setZero();
        bcy.setZero();
        auto [ci, cj] = ps.cell(face);
        if (ps.side(face) % 2 == 1) bcx[cj] = 1; // left/right face: enters along x in row cj
        else bcy[ci] = 1;
        direct[col] = solver.sweep(m, zero, bcx, bcy);
        q.col(col) = direct[col] / M;
    }
    const Eigen::MatrixXd rho = solver.problem().sigma_s.maxCoeff() > 0 ? Eigen::MatrixXd(solver.scalar_flux_operator().solve(q))
                                                                        : q;
    Eigen::VectorXd st(nc);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) st[i + n * j] = problem.sigma_s(i, j) / problem.knudsen;

    AlbedoMatrix out;
    out.n_space = n;
    out.n_angles = M;
    out.entries.resize(dim, dim);
    Eigen::VectorXd col_out(dim);
    Eigen::VectorXd zb = Eigen::VectorXd::Zero(n);
    for (int col = 0; col < dim; ++col) {
        const int face = col / (M / 2), m = ps.inflow_ordinate(face, col % (M / 2));
        col_out.setZero();
        const Eigen::VectorXd src = st.cwiseProduct(rho.col(col));
        for (int mm = 0; mm < M; ++mm) {
            Eigen::VectorXd f = solver.sweep(mm, src, zb, zb);
            if (mm == m) f += direct[col];
            // scatter into outflow slots of direction mm
            const auto v = ps.velocity(mm);
            for (int t = 0; t < n; ++t) {
                if (v[0] > 0) col_out[ps.outflow_index(n + t, mm)] = f[(n - 1) + n * t];
                else col_out[ps.outflow_index(3 * n + (n - 1 - t), mm)] = f[n * t];
                if (v[1] > 0) col_out[ps.outflow_index(2 * n + (n - 1 - t), mm)] = f[t + n * (n - 1)];
                else col_out[ps.outflow_index(t, mm)] = f[t];
            }
        }
        out.entries.col(col) = col_out;
    }
    // flux units: scale by |v.n| of the outgoing row over that of the incoming column
    for (int o = 0; o < dim; ++o) out.entries.row(o) *= ps.outflow_cosine(o);
    for (int i = 0; i < dim; ++i) out.entries.col(i) /= ps.inflow_cosine(i);

    for (int k = 0; k < dim; ++k) {
        const int face = k / (M / 2);
        out.inflow_nodes.push_back({face, ps.inflow_ordinate(face, k % (M / 2))});
        out.outflow_nodes.push_back({face, ps.outflow_ordinate(face, k % (M / 2))});
    }
    return out;
}

std::string albedo_sidecar_json(const AlbedoMatrix &a) {
    nlohmann::ordered_json j;
    j["n_space"] = a.n_space;
    j["n_angles"] = a.n_angles;
    j["dimension"] = a.entries.rows();
    j["ordinates"] = "theta_m = 2 pi (m + 1/2) / n_angles, equal weights";
    j["grouping"] = "index = face * (n_angles/2) + k; faces counterclockwise from (0,0): bottom, right, top, left; "
                    "k runs over the half-circle of incoming (outgoing) ordinates starting next to the face tangent";
    j["normalization"] = "flux: entry scaled by |v_out.n| / |v_in.n|";
    return j.dump(2);
}

Eigen::VectorXd diffusion_limit(int n, const std::function<double(double, double)> &g) {
    if (n < 1) throw std::invalid_argument("n_space must be >= 1");
    const double h = 1.0 / n;
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int c = i + n * j;
            double diag = 0;
            const auto link = [&](int ii, int jj, double bx, double by) {
                if (ii >= 0 && ii < n && jj >= 0 && jj < n) {
                    t.emplace_back(c, ii + n * jj, -1.0);
                    diag += 1;
                } else {
                    diag += 2; // half-cell distance to the face
                    rhs[c] += 2 * g(bx, by);
                }
            };
            link(i - 1, j, 0, (j + 0.5) * h);
            link(i + 1, j, 1, (j + 0.5) * h);
            link(i, j - 1, (i + 0.5) * h, 0);
            link(i, j + 1, (i + 0.5) * h, 1);
            t.emplace_back(c, c, diag);
        }
    Eigen::SparseMatrix<double> a(n * n, n * n);
    a.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("diffusion solve failed");
    return ldlt.solve(rhs);
}

RteProblem rte_refinement(int k, double knudsen, double sigma) {
    if (k < 1 || k > 7) throw std::invalid_argument("RTE refinement level must lie in [1, 7]");
    return RteProblem::homogeneous(1 << k, 1 << (k + 1), knudsen, sigma);
}

std::vector<SweepCell> rte_success_sweep(const std::vector<double> &ps, const std::vector<int> &levels, int trials,
                                         double knudsen, double success_tol, const CompletionConfig &cfg,
                                         std::uint64_t seed) {
    const BlockSource source = [knudsen](int level) {
        const AlbedoMatrix a = assemble_albedo(rte_refinement(level, knudsen));
        const Block b = named_block(static_cast<int>(a.entries.rows()), 'a');
        return Eigen::MatrixXd(a.entries.block(b.row_start, b.col_start, b.row_len, b.col_len));
    };
    return success_ratio_sweep(source, ps, levels, trials, success_tol, cfg, seed);
}

} // namespace itomc
