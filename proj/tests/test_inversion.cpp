#include <doctest.h>

#include "itomc/inversion.hpp"
#include "itomc/phantoms.hpp"

#include <random>
#include <sstream>

using namespace itomc;

TEST_CASE("misfit vanishes at the generating conductivity") {
    const auto g = GridSpec::from_level(3);
    const auto a = two_blob(4, 4);
    const auto t = MisfitTarget::full(assemble_dtn(g, a).entries);
    const auto m = misfit(a, t, g);
    CHECK(m.value == 0.0);
    CHECK(m.gradient.norm() <= 1e-10);
}

TEST_CASE("misfit gradient matches central differences") {
    const auto g = GridSpec::from_level(3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    Eigen::VectorXd v(16), w(16);
    for (auto &x : v) x = u(rng);
    for (auto &x : w) x = u(rng);
    const auto target = MisfitTarget::full(assemble_dtn(g, ConductivityField(4, 4, w)).entries);
    const ConductivityField a(4, 4, v);
    const auto m = misfit(a, target, g);
    Eigen::VectorXd fd(16);
    const double h = 1e-6;
    for (int k = 0; k < 16; ++k) {
        Eigen::VectorXd p = v, q = v;
        p[k] += h;
        q[k] -= h;
        fd[k] = (misfit(ConductivityField(4, 4, p), target, g).value - misfit(ConductivityField(4, 4, q), target, g).value) /
                (2 * h);
    }
    CHECK((fd - m.gradient).norm() <= 1e-5 * m.gradient.norm());
}

TEST_CASE("masked mode with a full mask equals full mode") {
    const auto g = GridSpec::from_level(3);
    const auto p = build_partition(g.boundary_count, Admissibility::strong_periodic, 8);
    BudgetRule rule;
    rule.p = 1.0;
    const auto mask = build_mask(p, rule, 0);
    const Eigen::MatrixXd data = assemble_dtn(g, ConductivityField::constant(2, 2, 1.7)).entries;
    const auto a = two_blob(4, 4);
    const auto mf = misfit(a, MisfitTarget::full(data), g);
    const auto mm = misfit(a, MisfitTarget::masked(data, mask), g);
    CHECK(mf.value == mm.value);
    CHECK(mf.gradient == mm.gradient);
}

TEST_CASE("constant conductivity is recovered") {
    const auto g = GridSpec::from_level(3);
    const auto t = MisfitTarget::full(assemble_dtn(g, ConductivityField::constant(4, 4, 1.5)).entries);
    InversionConfig cfg;
    cfg.param_nx = cfg.param_ny = 4;
    const auto res = gauss_newton(t, cfg, g);
    CHECK((res.field.values().array() - 1.5).abs().maxCoeff() <= 1e-6);
    // accepted steps decrease the misfit
    for (size_t k = 1; k < res.trace.size(); ++k)
        if (res.trace[k].accepted) CHECK(res.trace[k].misfit < res.trace[k - 1].misfit);
    std::ostringstream os;
    write_trace_csv(os, res.trace);
    CHECK(os.str().rfind("iter,misfit,grad_norm,lambda,accepted\n", 0) == 0);
}

TEST_CASE("starting at the truth stops immediately") {
    const auto g = GridSpec::from_level(3);
    const auto a = two_blob(4, 4);
    const auto t = MisfitTarget::full(assemble_dtn(g, a).entries);
    InversionConfig cfg;
    const auto res = gauss_newton(t, cfg, g, &a);
    CHECK(res.iterations == 0);
    CHECK(res.misfit == 0.0);
    CHECK(res.converged);
}

TEST_CASE("log parameterization also recovers a constant") {
    const auto g = GridSpec::from_level(3);
    const auto t = MisfitTarget::full(assemble_dtn(g, ConductivityField::constant(2, 2, 0.7)).entries);
    InversionConfig cfg;
    cfg.param_nx = cfg.param_ny = 2;
    cfg.log_param = true;
    const auto res = gauss_newton(t, cfg, g);
    CHECK((res.field.values().array() - 0.7).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("tikhonov hook pulls towards the prior") {
    const auto g = GridSpec::from_level(3);
    const auto t = MisfitTarget::full(assemble_dtn(g, ConductivityField::constant(2, 2, 2.0)).entries);
    InversionConfig cfg;
    cfg.param_nx = cfg.param_ny = 2;
    cfg.reg_alpha = 10.0;
    const auto res = gauss_newton(t, cfg, g);
    CHECK(res.field.values().maxCoeff() < 1.9);
    CHECK(res.field.values().minCoeff() > 1.0);
}

TEST_CASE("reconstruction distances") {
    const auto a = two_blob(8, 8);
    const auto d0 = compare_reconstructions(a, a);
    CHECK(d0.rel_l2 == 0.0);
    CHECK(d0.linf == 0.0);
    const ConductivityField a2(8, 8, 2 * a.values());
    const auto d = compare_reconstructions(a, a2);
    CHECK(d.rel_l2 == doctest::Approx(1.0));
    CHECK(d.linf == doctest::Approx(a.values().maxCoeff()));
    CHECK_THROWS_AS(compare_reconstructions(a, two_blob(4, 4)), std::invalid_argument);
}

TEST_CASE("config validation") {
    InversionConfig c;
    c.positivity_floor = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.reg_beta = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
