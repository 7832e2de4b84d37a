#include "itomc/refinement.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace itomc {

namespace {

void check_levels(const std::vector<int> &levels) {
    if (levels.size() < 2) throw std::invalid_argument("refinement_consistency needs at least two levels");
    for (size_t k = 1; k < levels.size(); ++k)
        if (levels[k] < levels[k - 1]) throw std::invalid_argument("levels must be increasing");
}

// per level: the weighted spectra of every test function's flux, stacked
std::vector<Eigen::VectorXd> level_spectra(const GridSpec &g, const Eigen::MatrixXd &dtn, const RefinementOptions &opt) {
    std::vector<Eigen::VectorXd> out;
    for (int k = 1; k <= opt.test_modes; ++k)
        for (int trig = 0; trig < 2; ++trig) {
            const Eigen::VectorXd phi = boundary_project(g, [&](const BoundaryPoint &p) {
                const double t = 2 * std::numbers::pi * k * p.s / 4;
                return trig ? std::sin(t) : std::cos(t);
            });
            out.push_back(weighted_flux_spectrum(g, dtn * phi, opt.output_modes));
        }
    return out;
}

std::vector<RefinementRow> compare(const std::vector<int> &levels,
                                   const std::function<Eigen::MatrixXd(const GridSpec &)> &dtn,
                                   const RefinementOptions &opt) {
    check_levels(levels);
    if (opt.test_modes < 1 || opt.output_modes < 0) throw std::invalid_argument("invalid refinement options");
    std::vector<RefinementRow> rows;
    auto prev_grid = GridSpec::from_level(levels[0]);
    auto prev = level_spectra(prev_grid, dtn(prev_grid), opt);
    for (size_t k = 1; k < levels.size(); ++k) {
        const auto g = GridSpec::from_level(levels[k]);
        auto cur = level_spectra(g, dtn(g), opt);
        double d = 0;
        for (size_t t = 0; t < cur.size(); ++t) d = std::max(d, (cur[t] - prev[t]).norm());
        rows.push_back({levels[k - 1], levels[k], d});
        prev = std::move(cur);
    }
    return rows;
}

} // namespace

Eigen::VectorXd weighted_flux_spectrum(const GridSpec &g, const Eigen::VectorXd &flux, int modes) {
    if (flux.size() != g.boundary_count) throw std::invalid_argument("flux vector does not match the grid");
    Eigen::VectorXd out(2 * (2 * modes + 1));
    for (int m = -modes; m <= modes; ++m) {
        std::complex<double> c = 0;
        for (int k = 0; k < g.boundary_count; ++k)
            c += flux[k] * std::polar(1.0, -2 * std::numbers::pi * m * g.arclength(k) / 4);
        const double w = 1 / std::sqrt(1.0 + std::abs(m));
        out[2 * (m + modes)] = w * c.real();
        out[2 * (m + modes) + 1] = w * c.imag();
    }
    return out;
}

std::vector<RefinementRow> refinement_consistency(const std::function<double(double, double)> &a,
                                                  const std::vector<int> &levels, const RefinementOptions &opt) {
    return compare(levels, [&](const GridSpec &g) {
        const int c = g.cells_per_dim();
        return assemble_dtn(g, ConductivityField::sample(c, c, a)).entries;
    }, opt);
}

std::vector<RefinementRow> refinement_consistency(const ConductivityField &a, const std::vector<int> &levels,
                                                  const RefinementOptions &opt) {
    return compare(levels, [&](const GridSpec &g) { return assemble_dtn(g, a).entries; }, opt);
}

Eigen::VectorXd steklov_eigenvalues(const GridSpec &g, const Eigen::MatrixXd &dtn, int count) {
    if (dtn.rows() != g.boundary_count || dtn.cols() != g.boundary_count)
        throw std::invalid_argument("DtN matrix does not match the grid");
    if (count < 1 || count > g.boundary_count) throw std::invalid_argument("invalid eigenvalue count");
    const Eigen::MatrixXd mass = boundary_mass(g);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (dtn + dtn.transpose()), mass,
                                                                  Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("Steklov eigenproblem failed");
    return es.eigenvalues().head(count);
}

double steklov_square_first() {
    // tan t tanh t = 1 has its first root in (0, pi/2)
    double lo = 0.1, hi = 1.5;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::tan(mid) * std::tanh(mid) < 1 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    return 2 * t * std::tanh(t);
}

} // namespace itomc
