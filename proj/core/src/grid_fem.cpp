#include "itomc/grid_fem.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace itomc {

GridSpec GridSpec::from_level(int level) {
    if (level < 1 || level > 12)
        throw std::invalid_argument("grid level must lie in [1, 12], got " + std::to_string(level));
    GridSpec g;
    g.level = level;
    g.nodes_per_dim = (1 << level) + 1;
    g.mesh_size = 1.0 / (1 << level);
    g.boundary_count = 1 << (level + 2);
    return g;
}

std::array<int, 2> GridSpec::boundary_node(int k) const {
    const int m = cells_per_dim();
    if (k < 0 || k >= boundary_count)
        throw std::out_of_range("boundary index out of range");
    const int side = k / m, t = k % m;
    switch (side) {
    case 0: return {t, 0};
    case 1: return {m, t};
    case 2: return {m - t, m};
    default: return {0, m - t};
    }
}

std::array<double, 2> GridSpec::boundary_point(int k) const {
    auto [i, j] = boundary_node(k);
    return {i * mesh_size, j * mesh_size};
}

std::vector<int> GridSpec::boundary_nodes() const {
    std::vector<int> out(boundary_count);
    for (int k = 0; k < boundary_count; ++k) {
        auto [i, j] = boundary_node(k);
        out[k] = node_index(i, j);
    }
    return out;
}

ConductivityField::ConductivityField(int nx, int ny, Eigen::VectorXd values)
    : nx_(nx), ny_(ny), values_(std::move(values)) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("parameter grid must be at least 1x1");
    if (values_.size() != static_cast<Eigen::Index>(nx) * ny)
        throw std::invalid_argument("conductivity value count does not match parameter grid");
    for (Eigen::Index k = 0; k < values_.size(); ++k)
        if (!std::isfinite(values_[k]) || values_[k] <= 0)
            throw std::invalid_argument("conductivity must be finite and strictly positive (pixel " +
                                        std::to_string(k) + ")");
}

ConductivityField ConductivityField::constant(int nx, int ny, double value) {
    return {nx, ny, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nx) * ny, value)};
}

ConductivityField ConductivityField::sample(int nx, int ny,
                                            const std::function<double(double, double)> &g) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            v[i + nx * j] = g((i + 0.5) / nx, (j + 0.5) / ny);
    return {nx, ny, std::move(v)};
}

void ConductivityField::check_compatible(const GridSpec &grid) const {
    const int m = grid.cells_per_dim();
    if (m % nx_ != 0 || m % ny_ != 0)
        throw std::invalid_argument("parameter grid " + std::to_string(nx_) + "x" + std::to_string(ny_) +
                                    " does not divide the " + std::to_string(m) + "x" +
                                    std::to_string(m) + " cell grid");
}

int ConductivityField::pixel_of_cell(const GridSpec &grid, int ci, int cj) const {
    const int m = grid.cells_per_dim();
    return ci / (m / nx_) + nx_ * (cj / (m / ny_));
}

const Eigen::Matrix4d &element_stiffness() {
    static const Eigen::Matrix4d ke = [] {
        Eigen::Matrix4d k;
        k << 4, -1, -2, -1,
            -1, 4, -1, -2,
            -2, -1, 4, -1,
            -1, -2, -1, 4;
        return Eigen::Matrix4d(k / 6.0);
    }();
    return ke;
}

StiffnessSystem::StiffnessSystem(const GridSpec &grid, const ConductivityField &a) : grid_(grid) {
    a.check_compatible(grid);
    const int nh = grid.nodes_per_dim, m = grid.cells_per_dim();
    const int nb = grid.boundary_count;
    bnodes_ = grid.boundary_nodes();

    // boundary nodes get -(position+1); interior nodes their unknown number
    std::vector<int> code(grid.node_count(), 0);
    for (int k = 0; k < nb; ++k) code[bnodes_[k]] = -(k + 1);
    inum_.assign(grid.node_count(), -1);
    int ni = 0;
    for (int j = 1; j < nh - 1; ++j)
        for (int i = 1; i < nh - 1; ++i) {
            const int g = grid.node_index(i, j);
            inum_[g] = ni;
            code[g] = ni++;
        }

    using T = Eigen::Triplet<double>;
    std::vector<T> tii, tib, tbb;
    tii.reserve(16 * static_cast<size_t>(m) * m);
    const auto &ke = element_stiffness();
    for (int cj = 0; cj < m; ++cj)
        for (int ci = 0; ci < m; ++ci) {
            const double ac = a.values()[a.pixel_of_cell(grid, ci, cj)];
            const int loc[4] = {grid.node_index(ci, cj), grid.node_index(ci + 1, cj),
                                grid.node_index(ci + 1, cj + 1), grid.node_index(ci, cj + 1)};
            for (int p = 0; p < 4; ++p)
                for (int q = 0; q < 4; ++q) {
                    const int cp = code[loc[p]], cq = code[loc[q]];
                    const double v = ac * ke(p, q);
                    if (cp >= 0 && cq >= 0) tii.emplace_back(cp, cq, v);
                    else if (cp >= 0) tib.emplace_back(cp, -cq - 1, v);
                    else if (cq < 0) tbb.emplace_back(-cp - 1, -cq - 1, v);
                }
        }
    sii_.resize(ni, ni);
    sii_.setFromTriplets(tii.begin(), tii.end());
    sib_.resize(ni, nb);
    sib_.setFromTriplets(tib.begin(), tib.end());
    sbb_.resize(nb, nb);
    sbb_.setFromTriplets(tbb.begin(), tbb.end());

    chol_.compute(sii_);
    if (chol_.info() != Eigen::Success)
        throw std::runtime_error("interior stiffness factorization failed");
}

Eigen::MatrixXd StiffnessSystem::solve(const Eigen::MatrixXd &rhs) const {
    Eigen::MatrixXd x = chol_.solve(rhs);
    if (chol_.info() != Eigen::Success)
        throw std::runtime_error("interior stiffness solve failed");
    return x;
}

Eigen::MatrixXd StiffnessSystem::schur_block(int r0, int nr, int c0, int nc) const {
    const int nb = grid_.boundary_count;
    if (r0 < 0 || nr < 0 || r0 + nr > nb || c0 < 0 || nc < 0 || c0 + nc > nb)
        throw std::out_of_range("DtN block outside the boundary index range");
    Eigen::MatrixXd out = Eigen::MatrixXd(sbb_.block(r0, c0, nr, nc));
    if (sii_.rows() == 0) return out;
    const SpMat rows_t = SpMat(sib_.middleCols(r0, nr).transpose());
    constexpr int chunk = 128;
    for (int c = 0; c < nc; c += chunk) {
        const int w = std::min(chunk, nc - c);
        const Eigen::MatrixXd rhs = Eigen::MatrixXd(sib_.middleCols(c0 + c, w));
        const Eigen::MatrixXd x = solve(rhs);
        out.middleCols(c, w).noalias() -= rows_t * x;
    }
    return out;
}

Eigen::MatrixXd StiffnessSystem::harmonic_extensions() const {
    const int nb = grid_.boundary_count;
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(grid_.node_count(), nb);
    for (int k = 0; k < nb; ++k) u(bnodes_[k], k) = 1.0;
    if (sii_.rows() == 0) return u;
    const Eigen::MatrixXd x = solve(Eigen::MatrixXd(sib_));
    for (int g = 0; g < grid_.node_count(); ++g)
        if (inum_[g] >= 0) u.row(g) = -x.row(inum_[g]);
    return u;
}

ItoMatrix assemble_dtn(const GridSpec &grid, const ConductivityField &a) {
    StiffnessSystem sys(grid, a);
    ItoMatrix out;
    out.entries = sys.schur_block(0, grid.boundary_count, 0, grid.boundary_count);
    out.kind = ItoKind::dtn;
    out.level = grid.level;
    return out;
}

Eigen::MatrixXd assemble_dtn_block(const GridSpec &grid, const ConductivityField &a, int r0, int nr,
                                   int c0, int nc) {
    StiffnessSystem sys(grid, a);
    return sys.schur_block(r0, nr, c0, nc);
}

Eigen::VectorXd boundary_project(const GridSpec &grid, const BoundaryFunction &f) {
    Eigen::VectorXd v(grid.boundary_count);
    for (int k = 0; k < grid.boundary_count; ++k) {
        auto [x, y] = grid.boundary_point(k);
        v[k] = f({x, y, grid.arclength(k)});
    }
    return v;
}

Eigen::MatrixXd boundary_mass(const GridSpec &grid) {
    const int n = grid.boundary_count;
    const double h = grid.mesh_size;
    Eigen::MatrixXd mb = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        mb(i, i) += 2 * h / 3;
        mb(i, (i + 1) % n) += h / 6;
        mb(i, (i + n - 1) % n) += h / 6;
    }
    return mb;
}

DtnJacobian::DtnJacobian(const GridSpec &grid, const ConductivityField &a) {
    StiffnessSystem sys(grid, a);
    n_ = grid.boundary_count;
    const Eigen::MatrixXd u = sys.harmonic_extensions();

    // DtN from the same extensions: S^bb - S^bi X with X = -U_interior
    {
        const auto &inum = sys.interior_number();
        Eigen::MatrixXd ui(sys.interior_block().rows(), n_);
        for (int g = 0; g < grid.node_count(); ++g)
            if (inum[g] >= 0) ui.row(inum[g]) = u.row(g);
        dtn_ = Eigen::MatrixXd(sys.boundary_block());
        if (ui.rows() > 0) dtn_.noalias() += SpMat(sys.coupling().transpose()) * ui;
    }

    const int m = grid.cells_per_dim();
    const int px = m / a.nx(), py = m / a.ny();
    const int pnx = px + 1, pny = py + 1, pn = pnx * pny;

    // unit-coefficient stiffness on one pixel patch, factored as R^T R
    Eigen::MatrixXd kp = Eigen::MatrixXd::Zero(pn, pn);
    const auto &ke = element_stiffness();
    for (int cj = 0; cj < py; ++cj)
        for (int ci = 0; ci < px; ++ci) {
            const int loc[4] = {ci + pnx * cj, ci + 1 + pnx * cj, ci + 1 + pnx * (cj + 1),
                                ci + pnx * (cj + 1)};
            for (int p = 0; p < 4; ++p)
                for (int q = 0; q < 4; ++q) kp(loc[p], loc[q]) += ke(p, q);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kp);
    const double tol = 1e-12 * es.eigenvalues().maxCoeff();
    int keep = 0;
    for (int i = 0; i < pn; ++i) keep += es.eigenvalues()[i] > tol;
    Eigen::MatrixXd r(keep, pn);
    for (int i = pn - keep, row = 0; i < pn; ++i, ++row)
        r.row(row) = std::sqrt(es.eigenvalues()[i]) * es.eigenvectors().col(i).transpose();

    data_.resize(static_cast<Eigen::Index>(n_) * n_, a.size());
    Eigen::MatrixXd up(pn, n_), g(n_, n_);
    for (int pj = 0; pj < a.ny(); ++pj)
        for (int pi = 0; pi < a.nx(); ++pi) {
            for (int lj = 0; lj < pny; ++lj)
                for (int li = 0; li < pnx; ++li)
                    up.row(li + pnx * lj) = u.row(grid.node_index(pi * px + li, pj * py + lj));
            const Eigen::MatrixXd b = r * up;
            g.setZero();
            g.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
            auto col = Eigen::Map<Eigen::MatrixXd>(data_.col(pi + a.nx() * pj).data(), n_, n_);
            col = g.selfadjointView<Eigen::Lower>();
        }
}

} // namespace itomc
