// Acceptance criteria 1-10. Usage: acceptance [criterion ...]; no argument runs all.
// Prints one PASS/FAIL line per criterion; exit status is nonzero if any fails.

#include "itomc/completion.hpp"
#include "itomc/grid_fem.hpp"
#include "itomc/hpartition.hpp"
#include "itomc/inversion.hpp"
#include "itomc/phantoms.hpp"
#include "itomc/refinement.hpp"
#include "itomc/rte.hpp"
#include "itomc/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace itomc;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

Eigen::MatrixXd shepp_logan_block(int level, char name) {
    const auto g = GridSpec::from_level(level);
    const Block b = named_block(g.boundary_count, name);
    return assemble_dtn_block(g, shepp_logan(g.cells_per_dim(), g.cells_per_dim()), b.row_start, b.row_len,
                              b.col_start, b.col_len);
}

// 1: admissible blocks of the Shepp-Logan DtN matrix have eps-rank <= 5
void rank_structure(Outcome &o) {
    for (int level : {6, 7, 8}) {
        const auto g = GridSpec::from_level(level);
        const auto L = assemble_dtn(g, shepp_logan(g.cells_per_dim(), g.cells_per_dim())).entries;
        const auto p = build_partition(g.boundary_count, Admissibility::strong_periodic, 8);
        const int r = rank_survey(L, p, 1e-6).max_admissible_rank();
        o.detail << " l=" << level << ":max_rank=" << r;
        o.check(r <= 5, "rank at level " + std::to_string(level));
    }
}

// 2: block a at n_a = 512, Bernoulli p = 0.1, 50 trials
void operating_point(Outcome &o) {
    const auto B = shepp_logan_block(9, 'a');
    const BlockSource src = [&](int) { return B; };
    const auto cells = success_ratio_sweep(src, {0.1}, {9}, 50, 1e-4, {}, 20240901);
    o.detail << " n_a=" << B.rows() << " successes=" << cells[0].successes << "/50 mean_err=" << cells[0].mean_err;
    o.check(cells[0].successes >= 45, "fewer than 45 successes");
}

// 3: phase transition in p across levels, and p <= 0.05 suffices at n_a = 512
void phase_transition(Outcome &o) {
    const std::vector<double> ps{0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7};
    const std::vector<int> levels{5, 6, 7};
    std::map<int, Eigen::MatrixXd> blocks;
    for (int l : levels) blocks[l] = shepp_logan_block(l, 'a');
    const auto cells = success_ratio_sweep([&](int l) { return blocks.at(l); }, ps, levels, 20, 1e-4, {}, 777);
    double prev_min = 2;
    for (int l : levels) {
        double prev_ratio = -1;
        for (const auto &c : cells)
            if (c.level == l) {
                o.check(c.ratio >= prev_ratio, "ratio decreases in p at level " + std::to_string(l));
                prev_ratio = c.ratio;
            }
        const double mp = minimal_p(cells, l, 0.9);
        o.detail << " l=" << l << ":min_p=" << mp;
        o.check(mp <= prev_min, "minimal p increases at level " + std::to_string(l));
        prev_min = mp;
    }
    const auto B9 = shepp_logan_block(9, 'a');
    const auto c9 = success_ratio_sweep([&](int) { return B9; }, {0.05}, {9}, 20, 1e-4, {}, 778);
    o.detail << " n_a=512,p=0.05:ratio=" << c9[0].ratio;
    o.check(c9[0].ratio >= 0.9, "p = 0.05 does not reach ratio 0.9 at n_a = 512");
}

// 4: coherence diagnostics across levels
void coherence_diag(Outcome &o) {
    double mu_min = 1e300, mu_max = 0;
    std::map<char, double> prev{{'a', 1e300}, {'b', 1e300}};
    for (int level = 5; level <= 8; ++level)
        for (char name : {'a', 'b'}) {
            const auto c = coherence_report(shepp_logan_block(level, name), 1e-6);
            if (name == 'a') {
                const double mu = std::max(c.mu_row, c.mu_col);
                mu_min = std::min(mu_min, mu);
                mu_max = std::max(mu_max, mu);
                o.detail << " l=" << level << ":mu_a=" << mu << "(normalized " << std::max(c.mu_row_normalized, c.mu_col_normalized)
                         << ")";
            }
            o.detail << " max_uv_" << name << "=" << c.max_uv;
            o.check(c.max_uv < prev[name], std::string("max|UV^T| not decreasing for block ") + name);
            prev[name] = c.max_uv;
        }
    o.check(mu_max < 2 * mu_min, "mu of block a varies by a factor " + std::to_string(mu_max / mu_min));
}

// 5: synthetic incoherent low-rank matrices and fully observed inputs
void completion_oracle(Outcome &o) {
    std::mt19937_64 rng(55);
    std::normal_distribution<double> nd;
    int ok = 0;
    for (int t = 0; t < 100; ++t) {
        const int n = 40, r = 1 + t % 3;
        Eigen::MatrixXd U(n, r), V(n, r);
        for (auto &x : U.reshaped()) x = nd(rng);
        for (auto &x : V.reshaped()) x = nd(rng);
        const Eigen::MatrixXd M = U * V.transpose();
        const auto pat = bernoulli_pattern(n, n, 0.6, derive_seed(99, t));
        const auto res = complete_block(ObservedBlock::from_pattern(M, pat), {});
        if ((res.X - M).norm() <= 1e-6 * M.norm()) ++ok;
    }
    o.detail << " synthetic=" << ok << "/100";
    o.check(ok >= 95, "fewer than 95 recoveries");
    Eigen::MatrixXd F(30, 25);
    for (auto &x : F.reshaped()) x = nd(rng);
    const auto full = complete_block(ObservedBlock::from_pattern(F, std::vector<unsigned char>(F.size(), 1)), {});
    o.detail << " full_obs_diff=" << (full.X - F).cwiseAbs().maxCoeff();
    o.check(full.X == F, "fully observed input not returned exactly");
}

// 6: DtN symmetry, constants in the kernel, PSD
void forward_invariants(Outcome &o) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        const auto g = GridSpec::from_level(2 + t % 5);
        const int c = g.cells_per_dim();
        Eigen::VectorXd v(c * c);
        for (auto &x : v) x = u(rng);
        const auto L = assemble_dtn(g, ConductivityField(c, c, v)).entries;
        const double nrm = L.cwiseAbs().maxCoeff();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (L + L.transpose()), Eigen::EigenvaluesOnly);
        const double sym = (L - L.transpose()).cwiseAbs().maxCoeff() / nrm;
        const double kern = (L * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff() / nrm;
        const double neg = std::max(0.0, -es.eigenvalues().minCoeff()) / es.eigenvalues().maxCoeff();
        worst = std::max({worst, sym, kern, neg});
        o.check(sym <= 1e-10 && kern <= 1e-10 && neg <= 1e-10, "invariant violated in trial " + std::to_string(t));
    }
    o.detail << " worst_relative_violation=" << worst;
}

// 7: Jacobian and misfit gradient against central differences
void jacobian_fd(Outcome &o) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u(0.5, 2.0);
    const double step = 1e-6;
    for (int level : {3, 4}) {
        const auto g = GridSpec::from_level(level);
        const int c = g.cells_per_dim() / 2;
        Eigen::VectorXd a(c * c), d(c * c);
        for (auto &x : a) x = u(rng);
        for (auto &x : d) x = nd(rng);
        const ConductivityField f(c, c, a);
        const auto Lp = assemble_dtn(g, ConductivityField(c, c, a + step * d)).entries;
        const auto Lm = assemble_dtn(g, ConductivityField(c, c, a - step * d)).entries;
        const Eigen::MatrixXd fd = (Lp - Lm) / (2 * step);
        const Eigen::VectorXd jd = DtnJacobian(g, f).matrix() * d;
        const double ej = (jd - fd.reshaped()).norm() / jd.norm();

        Eigen::MatrixXd data = assemble_dtn(g, ConductivityField::constant(c, c, 1.3)).entries;
        const auto target = MisfitTarget::full(data);
        const double gfd = (misfit(ConductivityField(c, c, a + step * d), target, g).value -
                            misfit(ConductivityField(c, c, a - step * d), target, g).value) /
                           (2 * step);
        const double gan = misfit(f, target, g).gradient.dot(d);
        const double eg = std::abs(gan - gfd) / std::abs(gan);
        o.detail << " l=" << level << ":jac_err=" << ej << ",grad_err=" << eg;
        o.check(ej <= 1e-5 && eg <= 1e-5, "finite-difference mismatch at level " + std::to_string(level));
    }
}

// 8: reconstructions from exact, completed and raw data on a two-blob phantom
void inversion_compare(Outcome &o) {
    const auto g = GridSpec::from_level(6);
    const auto truth = two_blob(16, 16);
    const auto L = assemble_dtn(g, truth).entries;
    const auto part = build_partition(g.boundary_count, Admissibility::strong_periodic, 8);
    BudgetRule rule;
    rule.mode = BudgetMode::theorem_budget;
    rule.C = 0.5;
    const auto mask = build_mask(part, rule, 1);
    const auto comp = complete_ito_matrix(L, mask, part, {}, &L);
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(L.rows(), L.cols());
    for (auto [i, j] : mask.entries) raw(i, j) = L(i, j);

    InversionConfig cfg;
    cfg.reg_alpha = 1e-7;
    cfg.max_iter = 100;
    const auto ex = gauss_newton(MisfitTarget::full(L), cfg, g);
    const auto co = gauss_newton(MisfitTarget::full(comp.matrix), cfg, g);
    const auto rw = gauss_newton(MisfitTarget::full(raw), cfg, g);
    const double dc = compare_reconstructions(ex.field, co.field).rel_l2;
    const double dr = compare_reconstructions(ex.field, rw.field).rel_l2;
    o.detail << " density=" << mask_density(mask, part).global << " completion_ok=" << comp.report.all_success()
             << " d(completed,exact)=" << dc << " d(raw,exact)=" << dr
             << " d(exact,truth)=" << compare_reconstructions(truth, ex.field).rel_l2;
    o.check(dc <= 5e-2, "completed reconstruction too far from the exact one");
    o.check(dr >= 5 * dc, "raw reconstruction not 5x farther");
}

// 9: refinement consistency and the Steklov oracle
void refinement(Outcome &o) {
    const std::pair<const char *, std::function<double(double, double)>> fields[] = {
        {"constant", [](double, double) { return 1.0; }}, {"bump", smooth_bump}};
    for (const auto &[name, a] : fields) {
        const auto rows = refinement_consistency(a, {3, 4, 5, 6});
        o.detail << " " << name << ":";
        for (size_t k = 0; k < rows.size(); ++k) {
            o.detail << (k ? "," : "") << rows[k].discrepancy;
            if (k) o.check(rows[k].discrepancy < rows[k - 1].discrepancy, std::string("not decreasing for ") + name);
        }
    }
    const auto g = GridSpec::from_level(6);
    const auto ev = steklov_eigenvalues(g, assemble_dtn(g, ConductivityField::constant(64, 64, 1.0)).entries, 2);
    const double oracle = steklov_square_first();
    const double rel = std::abs(ev[1] - oracle) / oracle;
    o.detail << " steklov=" << ev[1] << " oracle=" << oracle << " rel=" << rel;
    o.check(rel <= 0.01, "Steklov eigenvalue off by more than 1%");
}

// 10: albedo rank structure and RTE completion across refinement
void rte_structure(Outcome &o) {
    const int k = 4;
    const auto diff = assemble_albedo(rte_refinement(k, 1.0 / 32));
    const int n = static_cast<int>(diff.entries.rows());
    const int r = epsilon_rank(diff.entries, 1e-6);
    o.detail << " Kn=2^-5: dim=" << n << " eps_rank=" << r;
    o.check(r <= n / 10, "diffusive albedo eps-rank above 10% of the dimension");

    const auto ball = assemble_albedo(rte_refinement(k, 1.0));
    const auto part = build_partition(n, Admissibility::strong_periodic, 8);
    const int rb = rank_survey(ball.entries, part, 1e-6).max_admissible_rank();
    o.detail << " Kn=1: max_admissible_rank=" << rb;
    o.check(rb <= 5, "ballistic albedo admissible block eps-rank above 5");

    const auto cells = rte_success_sweep({0.5}, {2, 3}, 20, 1.0, 1e-4, {}, 1010);
    o.detail << " sweep p=0.5: l2=" << cells[0].ratio << " l3=" << cells[1].ratio;
    o.check(cells[1].ratio >= cells[0].ratio, "success ratio decreases under refinement");
}

const std::map<int, std::pair<const char *, void (*)(Outcome &)>> criteria{
    {1, {"rank structure", rank_structure}},
    {2, {"block completion operating point", operating_point}},
    {3, {"success-ratio phase transition", phase_transition}},
    {4, {"coherence diagnostics", coherence_diag}},
    {5, {"completion oracle suite", completion_oracle}},
    {6, {"forward-solver invariants", forward_invariants}},
    {7, {"jacobian and gradient correctness", jacobian_fd}},
    {8, {"end-to-end inversion comparison", inversion_compare}},
    {9, {"refinement consistency", refinement}},
    {10, {"RTE structure", rte_structure}},
};

} // namespace

int main(int argc, char **argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (const auto &kv : criteria) which.push_back(kv.first);
    bool all = true;
    for (int id : which) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << id << "\n";
            return 2;
        }
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            it->second.second(o);
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << it->second.first << "):"
                  << o.detail.str() << " (" << secs << " s)" << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
