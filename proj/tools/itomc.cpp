// Command-line front end for the ItO-matrix toolkit.

#include "itomc/completion.hpp"
#include "itomc/experiments.hpp"
#include "itomc/grid_fem.hpp"
#include "itomc/hpartition.hpp"
#include "itomc/inversion.hpp"
#include "itomc/io.hpp"
#include "itomc/rte.hpp"
#include "itomc/sampling.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace itomc;

namespace {

// relative output paths land under $ITOMC_OUTPUT_ROOT when it is set
fs::path out_path(const fs::path &p) {
    const char *root = std::getenv("ITOMC_OUTPUT_ROOT");
    fs::path r = (root && *root && p.is_relative()) ? fs::path(root) / p : p;
    if (r.has_parent_path()) fs::create_directories(r.parent_path());
    return r;
}

std::ofstream open_out(const fs::path &p) {
    std::ofstream os(out_path(p));
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

Eigen::MatrixXd load_matrix(const fs::path &p) {
    if (p.extension() == ".csv") return read_matrix_csv(p);
    return read_itom(p).data;
}

int level_for(int n) {
    for (int l = 1; l <= 12; ++l)
        if (GridSpec::from_level(l).boundary_count == n) return l;
    throw std::invalid_argument("matrix size " + std::to_string(n) + " is not 2^(level+2)");
}

struct PartitionOpts {
    std::string admissibility = "strong-periodic";
    int min_block = 8;
    void add(CLI::App *c) {
        c->add_option("--admissibility", admissibility, "weak | strong-periodic")->capture_default_str();
        c->add_option("--min-block", min_block, "leaf block size")->capture_default_str();
    }
    BlockPartition build(int n) const { return build_partition(n, parse_admissibility(admissibility), min_block); }
};

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"ItO-matrix toolkit: forward maps, hierarchical partitions, sampling, completion, inversion"};
    app.require_subcommand(1);

    // forward
    auto *fwd = app.add_subcommand("forward", "assemble the DtN matrix of a conductivity");
    int f_level = 6;
    std::string f_phantom = "shepp-logan", f_field, f_out = "dtn.itom", f_csv, f_pgm;
    fwd->add_option("--level", f_level, "refinement level")->capture_default_str();
    fwd->add_option("--phantom", f_phantom, "shepp-logan | two-blob | bump | constant")->capture_default_str();
    fwd->add_option("--field", f_field, "conductivity field container (overrides --phantom)");
    fwd->add_option("--out", f_out, "ITOM output")->capture_default_str();
    fwd->add_option("--csv", f_csv, "also write the matrix as CSV");
    fwd->add_option("--pgm", f_pgm, "also write the conductivity as PGM");

    // partition
    auto *part = app.add_subcommand("partition", "hierarchical block partition, optionally with eps-ranks");
    PartitionOpts p_opts;
    p_opts.add(part);
    int p_n = 0;
    double p_eps = 1e-6;
    std::string p_matrix, p_out = "partition.csv";
    part->add_option("--n", p_n, "matrix side (or take it from --matrix)");
    part->add_option("--matrix", p_matrix, "matrix (ITOM or CSV) for the eps-rank survey");
    part->add_option("--eps", p_eps, "absolute singular-value threshold")->capture_default_str();
    part->add_option("--out", p_out, "CSV output")->capture_default_str();

    // mask
    auto *msk = app.add_subcommand("mask", "sampling mask over a partition");
    PartitionOpts m_opts;
    m_opts.add(msk);
    int m_n = 0;
    std::uint64_t m_seed = 0;
    BudgetRule m_rule;
    std::string m_mode = "theorem-budget", m_out = "mask.csv";
    msk->add_option("--n", m_n, "matrix side")->required();
    msk->add_option("--seed", m_seed, "random seed")->required();
    msk->add_option("--mode", m_mode, "bernoulli | uniform-m | theorem-budget")->capture_default_str();
    msk->add_option("--p", m_rule.p, "Bernoulli probability")->capture_default_str();
    msk->add_option("--m", m_rule.m, "entries per block for uniform-m");
    msk->add_option("--C", m_rule.C, "budget constant")->capture_default_str();
    msk->add_option("--rank-guess", m_rule.rank_guess, "rank guess r in the budget")->capture_default_str();
    msk->add_option("--out", m_out, "CSV output (a .json sidecar is written next to it)")->capture_default_str();

    // complete
    auto *cmp = app.add_subcommand("complete", "complete the admissible blocks of a subsampled matrix");
    PartitionOpts c_opts;
    c_opts.add(cmp);
    std::string c_matrix, c_mask, c_truth, c_out = "completed.itom", c_report = "completion_report.csv";
    std::uint64_t c_seed = 0;
    double c_tol = 1e-4;
    CompletionConfig c_cfg;
    cmp->add_option("--matrix", c_matrix, "matrix holding the observed values")->required();
    cmp->add_option("--mask", c_mask, "mask CSV")->required();
    cmp->add_option("--seed", c_seed, "sketch seed")->required();
    cmp->add_option("--truth", c_truth, "ground truth for the success report");
    cmp->add_option("--success-tol", c_tol, "Frobenius success tolerance")->capture_default_str();
    cmp->add_option("--max-iter", c_cfg.max_iter, "iteration cap per block")->capture_default_str();
    cmp->add_option("--out", c_out, "ITOM output")->capture_default_str();
    cmp->add_option("--report", c_report, "per-block CSV report")->capture_default_str();

    // invert
    auto *inv = app.add_subcommand("invert", "Levenberg-Marquardt reconstruction of the conductivity");
    InversionConfig i_cfg;
    std::string i_matrix, i_mask, i_out = "recon.itom", i_pgm, i_trace;
    int i_grid = 16;
    PartitionOpts i_popts;
    inv->add_option("--matrix", i_matrix, "DtN data (ITOM or CSV)")->required();
    inv->add_option("--mask", i_mask, "compare only masked entries");
    i_popts.add(inv);
    inv->add_option("--param-grid", i_grid, "pixels per side of the unknown")->capture_default_str();
    inv->add_option("--max-iter", i_cfg.max_iter, "iteration cap")->capture_default_str();
    inv->add_option("--reg-alpha", i_cfg.reg_alpha, "Tikhonov weight towards the initial guess")->capture_default_str();
    inv->add_option("--init", i_cfg.init, "constant initial guess")->capture_default_str();
    inv->add_flag("--log-param", i_cfg.log_param, "step in log a");
    inv->add_option("--out", i_out, "field output")->capture_default_str();
    inv->add_option("--pgm", i_pgm, "field raster");
    inv->add_option("--trace", i_trace, "trace CSV");

    // rte
    auto *rte = app.add_subcommand("rte", "albedo matrix of the radiative transfer equation");
    int r_level = 3, r_space = 0, r_angles = 0;
    double r_kn = 1.0, r_sigma = 1.0;
    std::string r_out = "albedo.itom";
    rte->add_option("--level", r_level, "refinement level (n_space 2^k, n_angles 2^(k+1))")->capture_default_str();
    rte->add_option("--n-space", r_space, "cells per side (overrides --level)");
    rte->add_option("--n-angles", r_angles, "ordinates, multiple of 4 (overrides --level)");
    rte->add_option("--knudsen", r_kn, "Knudsen number")->capture_default_str();
    rte->add_option("--sigma", r_sigma, "homogeneous scattering coefficient")->capture_default_str();
    rte->add_option("--out", r_out, "ITOM output (a .json sidecar is written next to it)")->capture_default_str();

    // experiment
    auto *exp = app.add_subcommand("experiment", "run a configured experiment");
    std::string e_config, e_id, e_dir;
    std::vector<std::string> e_set;
    std::uint64_t e_seed = 0;
    exp->add_option("--config", e_config, "key = value config file");
    exp->add_option("--id", e_id, "experiment id (overrides the config)");
    exp->add_option("--set", e_set, "key=value override, repeatable");
    auto *seed_opt = exp->add_option("--seed", e_seed, "seed (mandatory for stochastic experiments)");
    exp->add_option("--output-dir", e_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fwd->parsed()) {
            const auto g = GridSpec::from_level(f_level);
            const ConductivityField a = f_field.empty() ? make_phantom(f_phantom, g.cells_per_dim()) : read_field(f_field);
            const auto L = assemble_dtn(g, a);
            write_ito_matrix(out_path(f_out), L);
            if (!f_csv.empty()) write_matrix_csv(out_path(f_csv), L.entries);
            if (!f_pgm.empty()) write_pgm(out_path(f_pgm), a, a.values().minCoeff(), a.values().maxCoeff());
            std::cout << "wrote " << L.entries.rows() << "x" << L.entries.cols() << " DtN matrix\n";
        } else if (part->parsed()) {
            Eigen::MatrixXd m;
            if (!p_matrix.empty()) {
                m = load_matrix(p_matrix);
                p_n = static_cast<int>(m.rows());
            }
            if (p_n <= 0) throw std::invalid_argument("give --n or --matrix");
            const auto p = p_opts.build(p_n);
            auto os = open_out(p_out);
            if (m.size()) {
                const auto rep = rank_survey(m, p, p_eps);
                write_partition_csv(os, p, &rep);
                std::cout << "max admissible eps-rank " << rep.max_admissible_rank() << "\n";
            } else {
                write_partition_csv(os, p);
            }
            std::cout << p.blocks.size() << " blocks\n";
        } else if (msk->parsed()) {
            m_rule.mode = parse_budget_mode(m_mode);
            const auto p = m_opts.build(m_n);
            const auto mask = build_mask(p, m_rule, m_seed);
            auto os = open_out(m_out);
            write_mask_csv(os, mask);
            open_out(fs::path(m_out).replace_extension(".json")) << mask_sidecar_json(mask, p) << "\n";
            std::cout << "density " << mask_density(mask, p).global << "\n";
        } else if (cmp->parsed()) {
            const Eigen::MatrixXd m = load_matrix(c_matrix);
            const auto p = c_opts.build(static_cast<int>(m.rows()));
            std::ifstream ms(c_mask);
            if (!ms) throw std::invalid_argument("cannot open mask " + c_mask);
            const auto mask = read_mask_csv(ms, p);
            Eigen::MatrixXd truth;
            if (!c_truth.empty()) truth = load_matrix(c_truth);
            c_cfg.seed = c_seed;
            const auto res = complete_ito_matrix(m, mask, p, c_cfg, c_truth.empty() ? nullptr : &truth, c_tol);
            write_itom(out_path(c_out), FileKind::dtn, res.matrix);
            auto os = open_out(c_report);
            res.report.write_csv(os);
            std::cout << "converged " << res.report.all_converged();
            if (!c_truth.empty()) std::cout << ", success " << res.report.all_success();
            std::cout << "\n";
            if (!res.report.all_converged() || (!c_truth.empty() && !res.report.all_success())) return 2;
        } else if (inv->parsed()) {
            const Eigen::MatrixXd m = load_matrix(i_matrix);
            const auto g = GridSpec::from_level(level_for(static_cast<int>(m.rows())));
            i_cfg.param_nx = i_cfg.param_ny = i_grid;
            MisfitTarget target = MisfitTarget::full(m);
            if (!i_mask.empty()) {
                std::ifstream ms(i_mask);
                if (!ms) throw std::invalid_argument("cannot open mask " + i_mask);
                target = MisfitTarget::masked(m, read_mask_csv(ms, i_popts.build(static_cast<int>(m.rows()))));
            }
            const auto res = gauss_newton(target, i_cfg, g);
            write_field(out_path(i_out), res.field);
            if (!i_pgm.empty()) write_pgm(out_path(i_pgm), res.field, res.field.values().minCoeff(), res.field.values().maxCoeff());
            if (!i_trace.empty()) {
                auto os = open_out(i_trace);
                write_trace_csv(os, res.trace);
            }
            std::cout << res.iterations << " iterations, misfit " << res.misfit << ", " << res.stop_reason << "\n";
            if (!res.converged) return 2;
        } else if (rte->parsed()) {
            RteProblem prob = (r_space > 0 || r_angles > 0)
                                  ? RteProblem::homogeneous(r_space, r_angles, r_kn, r_sigma)
                                  : rte_refinement(r_level, r_kn, r_sigma);
            const auto a = assemble_albedo(prob);
            write_itom(out_path(r_out), FileKind::albedo, a.entries);
            open_out(fs::path(r_out).replace_extension(".json")) << albedo_sidecar_json(a) << "\n";
            std::cout << "wrote " << a.entries.rows() << "x" << a.entries.cols() << " albedo matrix\n";
        } else if (exp->parsed()) {
            ExperimentConfig cfg = e_config.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(e_config);
            for (const auto &kv : e_set) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (!e_id.empty()) cfg.experiment = e_id;
            if (seed_opt->count()) cfg.seed = e_seed;
            if (!e_dir.empty()) cfg.output_dir = e_dir;
            cfg.output_dir = out_path(cfg.output_dir / "manifest.json").parent_path();
            const auto man = run_experiment(cfg);
            for (const auto &s : man.steps)
                std::cout << s.status << "  " << s.name << (s.message.empty() ? "" : "  (" + s.message + ")") << "\n";
            std::cout << "manifest " << (cfg.output_dir / "manifest.json").string() << "\n";
            if (!man.ok()) return 2;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
