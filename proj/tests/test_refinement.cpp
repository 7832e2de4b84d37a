#include <doctest.h>

#include "itomc/refinement.hpp"

#include <cmath>

using namespace itomc;

TEST_CASE("identical levels give zero discrepancy") {
    const auto rows = refinement_consistency([](double, double) { return 1.0; }, {3, 3});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].discrepancy == 0);
    CHECK_THROWS_AS(refinement_consistency([](double, double) { return 1.0; }, {4, 3}), std::invalid_argument);
    CHECK_THROWS_AS(refinement_consistency([](double, double) { return 1.0; }, {4}), std::invalid_argument);
}

TEST_CASE("discrepancy decreases under refinement") {
    const std::function<double(double, double)> fields[] = {
        [](double, double) { return 1.0; },
        [](double x, double y) { return 1 + 0.5 * std::exp(-((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)) / 0.05); }};
    for (const auto &a : fields) {
        const auto rows = refinement_consistency(a, {2, 3, 4, 5});
        REQUIRE(rows.size() == 3);
        for (size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].discrepancy < rows[k - 1].discrepancy);
    }
}

TEST_CASE("pixel field version matches the sampled version for constants") {
    const auto r1 = refinement_consistency(ConductivityField::constant(4, 4, 2.0), {2, 3});
    const auto r2 = refinement_consistency([](double, double) { return 2.0; }, {2, 3});
    CHECK(r1[0].discrepancy == doctest::Approx(r2[0].discrepancy).epsilon(1e-12));
}

TEST_CASE("spectrum of a constant flux lives in mode zero") {
    const auto g = GridSpec::from_level(3);
    const auto s = weighted_flux_spectrum(g, Eigen::VectorXd::Ones(g.boundary_count), 3);
    CHECK(s.size() == 14);
    CHECK(s[6] == doctest::Approx(32.0));
    CHECK(s.cwiseAbs().sum() == doctest::Approx(32.0));
}

TEST_CASE("Steklov spectrum of the unit square") {
    const double oracle = steklov_square_first();
    CHECK(oracle == doctest::Approx(1.3765).epsilon(1e-3));
    const auto g = GridSpec::from_level(4);
    const auto L = assemble_dtn(g, ConductivityField::constant(16, 16, 1.0)).entries;
    const auto ev = steklov_eigenvalues(g, L, 3);
    CHECK(std::abs(ev[0]) <= 1e-10);
    // the lowest nonzero mode is double (x- and y-antisymmetric)
    CHECK(ev[1] == doctest::Approx(ev[2]).epsilon(1e-8));
    CHECK(std::abs(ev[1] - oracle) <= 0.03 * oracle);
}
