#include <doctest.h>

#include "itomc/grid_fem.hpp"
#include "itomc/phantoms.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace itomc;

namespace {
ConductivityField random_field(int nx, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.5, 3.0);
    Eigen::VectorXd v(nx * nx);
    for (auto &x : v) x = u(rng);
    return {nx, nx, v};
}
} // namespace

TEST_CASE("GridSpec sizes") {
    const auto g = GridSpec::from_level(3);
    CHECK(g.nodes_per_dim == 9);
    CHECK(g.boundary_count == 32);
    CHECK(g.mesh_size == doctest::Approx(0.125));
    CHECK_THROWS_AS(GridSpec::from_level(0), std::invalid_argument);
    // cyclic order: corners at multiples of 2^level
    CHECK(g.boundary_node(0) == std::array<int, 2>{0, 0});
    CHECK(g.boundary_node(8) == std::array<int, 2>{8, 0});
    CHECK(g.boundary_node(16) == std::array<int, 2>{8, 8});
    CHECK(g.boundary_node(24) == std::array<int, 2>{0, 8});
    CHECK(g.boundary_node(31) == std::array<int, 2>{0, 1});
}

TEST_CASE("conductivity validation") {
    CHECK_THROWS_AS(ConductivityField(2, 2, Eigen::Vector4d(1, 1, 0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(ConductivityField(2, 2, Eigen::Vector4d(1, 1, NAN, 1)), std::invalid_argument);
    const auto a = ConductivityField::constant(3, 3, 1.0);
    CHECK_THROWS_AS(a.check_compatible(GridSpec::from_level(3)), std::invalid_argument);
    CHECK_THROWS_AS(assemble_dtn(GridSpec::from_level(3), a), std::invalid_argument);
}

TEST_CASE("level 2 constant conductivity annihilates constants") {
    const auto g = GridSpec::from_level(2);
    const auto L = assemble_dtn(g, ConductivityField::constant(4, 4, 1.0)).entries;
    CHECK(L.rows() == 16);
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((L * Eigen::VectorXd::Ones(16)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("flux of linear data matches the exact boundary integral") {
    // u = x is discretely harmonic; (Lambda x)_k = integral of n_x times the hat function
    const auto g = GridSpec::from_level(4);
    const auto L = assemble_dtn(g, ConductivityField::constant(4, 4, 1.0)).entries;
    const Eigen::VectorXd phi = boundary_project(g, [](const BoundaryPoint &p) { return p.x; });
    const Eigen::VectorXd flux = L * phi;
    const int m = g.cells_per_dim();
    const double h = g.mesh_size;
    for (int k = 0; k < g.boundary_count; ++k) {
        auto [i, j] = g.boundary_node(k);
        double expect = 0;
        if (i == m) expect = (j == 0 || j == m) ? h / 2 : h;
        if (i == 0) expect = (j == 0 || j == m) ? -h / 2 : -h;
        CHECK(flux[k] == doctest::Approx(expect).epsilon(1e-12).scale(1));
    }
}

TEST_CASE("dtn is 1-homogeneous in the conductivity") {
    const auto g = GridSpec::from_level(4);
    const auto L1 = assemble_dtn(g, ConductivityField::constant(16, 16, 1.0)).entries;
    const auto L2 = assemble_dtn(g, ConductivityField::constant(16, 16, 2.0)).entries;
    CHECK((L2 - 2 * L1).norm() <= 1e-10 * L2.norm());
    std::mt19937_64 rng(3);
    const auto a = random_field(8, rng);
    const auto La = assemble_dtn(g, a).entries;
    const auto Lc = assemble_dtn(g, ConductivityField(8, 8, 3.5 * a.values())).entries;
    CHECK((Lc - 3.5 * La).norm() <= 1e-10 * Lc.norm());
}

TEST_CASE("dtn invariants for random conductivities") {
    std::mt19937_64 rng(11);
    for (int level : {2, 3, 4}) {
        const auto g = GridSpec::from_level(level);
        for (int t = 0; t < 3; ++t) {
            const auto a = random_field(g.cells_per_dim(), rng);
            const auto L = assemble_dtn(g, a).entries;
            const double nrm = L.cwiseAbs().rowwise().sum().maxCoeff();
            CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * nrm);
            CHECK((L * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff() <= 1e-10 * nrm);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (L + L.transpose()), Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * nrm);
        }
    }
}

TEST_CASE("block assembly matches the full matrix") {
    const auto g = GridSpec::from_level(4);
    const auto a = shepp_logan(16, 16);
    const auto L = assemble_dtn(g, a).entries;
    const auto B = assemble_dtn_block(g, a, 0, 16, 32, 16);
    CHECK((B - L.block(0, 32, 16, 16)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("boundary projection") {
    const auto g = GridSpec::from_level(3);
    const auto ones = boundary_project(g, [](const BoundaryPoint &) { return 1.0; });
    CHECK(ones.isOnes());
    const auto xs = boundary_project(g, [](const BoundaryPoint &p) { return p.x; });
    for (int k = 0; k < g.boundary_count; ++k) CHECK(xs[k] == g.boundary_point(k)[0]);
    const auto c = boundary_project(g, [](const BoundaryPoint &p) { return std::cos(2 * std::numbers::pi * p.s); });
    CHECK(c.size() == 32);
    for (int k = 0; k < 32; ++k) CHECK(std::abs(c[k] - std::cos(2 * std::numbers::pi * k * 0.125)) <= 1e-12);
}

TEST_CASE("boundary mass integrates constants to the perimeter") {
    const auto g = GridSpec::from_level(3);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.boundary_count);
    CHECK(one.dot(boundary_mass(g) * one) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("jacobian symmetry, Euler identity and finite differences") {
    const auto g = GridSpec::from_level(3);
    std::mt19937_64 rng(5);
    const auto a1 = ConductivityField::constant(8, 8, 1.0);
    const DtnJacobian J(g, a1);
    const auto L = assemble_dtn(g, a1).entries;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(L.rows(), L.cols());
    for (int k = 0; k < J.parameters(); ++k) {
        const Eigen::MatrixXd s = J.slice(k);
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        sum += a1.values()[k] * s;
    }
    CHECK((sum - L).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((J.dtn() - L).cwiseAbs().maxCoeff() <= 1e-12);

    // central differences along a random direction
    std::normal_distribution<double> nd;
    Eigen::VectorXd d(64);
    for (auto &x : d) x = nd(rng);
    const double step = 1e-6;
    const auto Lp = assemble_dtn(g, ConductivityField(8, 8, a1.values() + step * d)).entries;
    const auto Lm = assemble_dtn(g, ConductivityField(8, 8, a1.values() - step * d)).entries;
    const Eigen::MatrixXd fd = (Lp - Lm) / (2 * step);
    const Eigen::VectorXd dir = J.matrix() * d;
    const Eigen::MatrixXd an = Eigen::Map<const Eigen::MatrixXd>(dir.data(), L.rows(), L.cols());
    CHECK((an - fd).norm() <= 1e-5 * an.norm());
}

TEST_CASE("jacobian on a coarse parameter grid at level 4") {
    const auto g = GridSpec::from_level(4);
    std::mt19937_64 rng(9);
    const auto a = random_field(4, rng);
    const DtnJacobian J(g, a);
    std::normal_distribution<double> nd;
    Eigen::VectorXd d(16);
    for (auto &x : d) x = nd(rng);
    const double step = 1e-6;
    const auto Lp = assemble_dtn(g, ConductivityField(4, 4, a.values() + step * d)).entries;
    const auto Lm = assemble_dtn(g, ConductivityField(4, 4, a.values() - step * d)).entries;
    const Eigen::VectorXd fd = Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd((Lp - Lm) / (2 * step)).data(), Lp.size());
    const Eigen::VectorXd an = J.matrix() * d;
    CHECK((an - fd).norm() <= 1e-5 * an.norm());
}

TEST_CASE("shepp-logan phantom range") {
    const auto a = shepp_logan(64, 64);
    CHECK(a.values().minCoeff() >= 1.0 - 1e-12);
    CHECK(a.values().maxCoeff() <= 2.0 + 1e-12);
    CHECK(a.values().maxCoeff() > 1.5);
}
