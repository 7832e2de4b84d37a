#include "itomc/experiments.hpp"

#include "itomc/completion.hpp"
#include "itomc/hpartition.hpp"
#include "itomc/inversion.hpp"
#include "itomc/io.hpp"
#include "itomc/phantoms.hpp"
#include "itomc/refinement.hpp"
#include "itomc/rte.hpp"
#include "itomc/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace itomc {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string &v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T> T parse_number(const std::string &key, const std::string &s) {
    T v{};
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw std::invalid_argument("bad value for '" + key + "': '" + s + "'");
    return v;
}

template <class T> std::vector<T> parse_list(const std::string &key, const std::string &s) {
    std::vector<T> out;
    for (const auto &item : split_list(s)) out.push_back(parse_number<T>(key, item));
    if (out.empty()) throw std::invalid_argument("empty list for '" + key + "'");
    return out;
}

template <class T> std::string join(const std::vector<T> &v) {
    std::string s;
    for (size_t k = 0; k < v.size(); ++k) {
        if (k) s += ",";
        if constexpr (std::is_floating_point_v<T>) s += format_double(v[k]);
        else s += std::to_string(v[k]);
    }
    return s;
}

const std::vector<std::string> &experiment_ids() {
    static const std::vector<std::string> ids{"rank-survey",       "coherence",  "block-sweep",
                                              "full-pipeline",     "inversion-compare", "rte-survey",
                                              "refinement-consistency"};
    return ids;
}

bool stochastic(const std::string &id) {
    return id == "block-sweep" || id == "full-pipeline" || id == "inversion-compare" || id == "rte-survey";
}

// ---- run bookkeeping

class Run {
  public:
    Run(const ExperimentConfig &cfg) : cfg_(cfg) {
        man_.experiment = cfg.experiment;
        man_.config_hash = cfg.hash();
        man_.config_text = cfg.canonical();
        std::filesystem::create_directories(cfg.output_dir);
    }

    void step(const std::string &name, const std::function<std::string()> &fn) {
        const auto t0 = std::chrono::steady_clock::now();
        StepRecord rec{name, "ok", 0, ""};
        try {
            rec.message = fn();
            if (rec.message.rfind("FAILED", 0) == 0) rec.status = "failed";
        } catch (const std::exception &e) {
            rec.status = "failed";
            rec.message = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        man_.steps.push_back(rec);
    }

    std::filesystem::path artifact(const std::string &name) {
        if (std::find(man_.artifacts.begin(), man_.artifacts.end(), name) == man_.artifacts.end())
            man_.artifacts.push_back(name);
        return cfg_.output_dir / name;
    }

    std::ofstream csv(const std::string &name, const std::string &header) {
        std::ofstream os(artifact(name));
        if (!os) throw std::runtime_error("cannot write " + name);
        os << header << "\n";
        return os;
    }

    RunManifest finish() {
        artifact("manifest.json");
        std::ofstream os(cfg_.output_dir / "manifest.json");
        os << man_.to_json() << "\n";
        return man_;
    }

  private:
    const ExperimentConfig &cfg_;
    RunManifest man_;
};

std::string fd(double v) { return format_double(v); }

Eigen::MatrixXd phantom_dtn(const ExperimentConfig &cfg, int level) {
    const auto g = GridSpec::from_level(level);
    return assemble_dtn(g, make_phantom(cfg.phantom, g.cells_per_dim())).entries;
}

Eigen::MatrixXd named(const Eigen::MatrixXd &m, char name) {
    const Block b = named_block(static_cast<int>(m.rows()), name);
    return m.block(b.row_start, b.col_start, b.row_len, b.col_len);
}

Eigen::MatrixXd log_magnitude(const Eigen::MatrixXd &m) {
    return m.cwiseAbs().unaryExpr([](double v) { return std::log10(std::max(v, 1e-16)); });
}

CompletionConfig completion_config(const ExperimentConfig &cfg) {
    CompletionConfig c;
    c.seed = cfg.seed.value_or(0);
    return c;
}

BudgetRule budget_rule(const ExperimentConfig &cfg) {
    BudgetRule r;
    r.mode = parse_budget_mode(cfg.budget_mode);
    r.p = cfg.budget_p;
    r.C = cfg.budget_C;
    r.rank_guess = cfg.rank_guess;
    r.m = 0;
    return r;
}

// ---- experiments

void rank_survey_exp(Run &run, const ExperimentConfig &cfg) {
    auto summary = run.csv("rank_summary.csv", "level,n,blocks,admissible_blocks,max_admissible_rank");
    for (int level : cfg.levels) {
        run.step("rank-survey level " + std::to_string(level), [&] {
            const auto L = phantom_dtn(cfg, level);
            const auto p = build_partition(static_cast<int>(L.rows()), parse_admissibility(cfg.admissibility), cfg.min_block);
            const auto rep = rank_survey(L, p, cfg.eps);
            std::ofstream os(run.artifact("partition_l" + std::to_string(level) + ".csv"));
            write_partition_csv(os, p, &rep);
            const Eigen::MatrixXd lm = log_magnitude(L);
            write_pgm(run.artifact("dtn_l" + std::to_string(level) + ".pgm"), lm, -12, lm.maxCoeff());
            long adm = 0;
            for (const auto &b : p.blocks) adm += b.tag != BlockTag::diagonal;
            summary << level << "," << L.rows() << "," << p.blocks.size() << "," << adm << ","
                    << rep.max_admissible_rank() << "\n";
            return "max admissible eps-rank " + std::to_string(rep.max_admissible_rank());
        });
    }
}

void coherence_exp(Run &run, const ExperimentConfig &cfg) {
    auto os = run.csv("coherence.csv", "level,block,rows,cols,rank,mu_row,mu_col,mu_row_normalized,mu_col_normalized,max_uv");
    for (int level : cfg.levels)
        run.step("coherence level " + std::to_string(level), [&] {
            const auto L = phantom_dtn(cfg, level);
            for (char name : {'a', 'b'}) {
                const Eigen::MatrixXd blk = named(L, name);
                const auto c = coherence_report(blk, cfg.eps);
                os << level << "," << name << "," << blk.rows() << "," << blk.cols() << "," << c.r << "," << fd(c.mu_row)
                   << "," << fd(c.mu_col) << "," << fd(c.mu_row_normalized) << "," << fd(c.mu_col_normalized) << ","
                   << fd(c.max_uv) << "\n";
            }
            return std::string();
        });
}

void write_heatmap(Run &run, const std::string &name, const std::vector<SweepCell> &cells,
                   const std::vector<int> &levels, const std::vector<double> &ps) {
    Eigen::MatrixXd h(levels.size(), ps.size());
    for (const auto &c : cells) {
        const auto li = std::find(levels.begin(), levels.end(), c.level) - levels.begin();
        const auto pi = std::find(ps.begin(), ps.end(), c.p) - ps.begin();
        h(li, pi) = c.ratio;
    }
    write_pgm(run.artifact(name), h, 0, 1);
}

void block_sweep_exp(Run &run, const ExperimentConfig &cfg) {
    run.step("block-sweep", [&] {
        const BlockSource src = [&](int level) { return named(phantom_dtn(cfg, level), 'a'); };
        const auto cells = success_ratio_sweep(src, cfg.p_grid, cfg.levels, cfg.trials, cfg.success_tol,
                                               completion_config(cfg), *cfg.seed);
        std::ofstream os(run.artifact("block_sweep.csv"));
        write_sweep_csv(os, cells);
        write_heatmap(run, "block_sweep.pgm", cells, cfg.levels, cfg.p_grid);
        auto mp = run.csv("minimal_p.csv", "level,minimal_p_ratio_0.9");
        for (int level : cfg.levels) mp << level << "," << fd(minimal_p(cells, level, 0.9)) << "\n";
        return std::string();
    });
}

void full_pipeline_exp(Run &run, const ExperimentConfig &cfg) {
    const int level = cfg.levels.front();
    Eigen::MatrixXd L;
    std::optional<BlockPartition> part;
    std::optional<SamplingMask> mask;
    run.step("forward", [&] {
        const auto g = GridSpec::from_level(level);
        const auto a = make_phantom(cfg.phantom, g.cells_per_dim());
        const auto ito = assemble_dtn(g, a);
        L = ito.entries;
        write_ito_matrix(run.artifact("dtn.itom"), ito);
        write_field(run.artifact("conductivity.itom"), a);
        write_pgm(run.artifact("conductivity.pgm"), a, a.values().minCoeff(), a.values().maxCoeff());
        return std::string();
    });
    run.step("partition", [&] {
        part = build_partition(static_cast<int>(L.rows()), parse_admissibility(cfg.admissibility), cfg.min_block);
        std::ofstream os(run.artifact("partition.csv"));
        write_partition_csv(os, *part);
        return std::string();
    });
    run.step("mask", [&] {
        mask = build_mask(*part, budget_rule(cfg), *cfg.seed);
        validate_mask(*mask, *part);
        std::ofstream os(run.artifact("mask.csv"));
        write_mask_csv(os, *mask);
        std::ofstream(run.artifact("mask.json")) << mask_sidecar_json(*mask, *part) << "\n";
        return "density " + fd(mask_density(*mask, *part).global);
    });
    run.step("complete", [&] {
        const auto res = complete_ito_matrix(L, *mask, *part, completion_config(cfg), &L, cfg.success_tol);
        std::ofstream os(run.artifact("completion_report.csv"));
        res.report.write_csv(os);
        write_itom(run.artifact("completed.itom"), FileKind::dtn, res.matrix);
        const std::string msg = "all_success " + std::to_string(res.report.all_success()) + ", error " +
                                fd((res.matrix - L).norm());
        return res.report.all_converged() ? msg : "FAILED: completion did not converge; " + msg;
    });
}

void inversion_compare_exp(Run &run, const ExperimentConfig &cfg) {
    const int level = cfg.levels.front();
    const auto g = GridSpec::from_level(level);
    const auto truth = make_phantom(cfg.phantom, cfg.param_grid);
    InversionConfig icfg;
    icfg.param_nx = icfg.param_ny = cfg.param_grid;
    icfg.max_iter = cfg.max_iter;
    icfg.reg_alpha = cfg.reg_alpha;
    const double lo = 1.0, hi = truth.values().maxCoeff();

    Eigen::MatrixXd L, completed, raw;
    run.step("forward and completion", [&] {
        L = assemble_dtn(g, truth).entries;
        const auto part = build_partition(static_cast<int>(L.rows()), parse_admissibility(cfg.admissibility), cfg.min_block);
        const auto mask = build_mask(part, budget_rule(cfg), *cfg.seed);
        const auto res = complete_ito_matrix(L, mask, part, completion_config(cfg), &L, cfg.success_tol);
        completed = res.matrix;
        raw = Eigen::MatrixXd::Zero(L.rows(), L.cols());
        for (auto [i, j] : mask.entries) raw(i, j) = L(i, j);
        write_field(run.artifact("truth.itom"), truth);
        write_pgm(run.artifact("truth.pgm"), truth, lo, hi);
        std::ofstream os(run.artifact("completion_report.csv"));
        res.report.write_csv(os);
        return "density " + fd(mask_density(mask, part).global) + ", all_success " + std::to_string(res.report.all_success());
    });

    auto dist = run.csv("distances.csv", "data,iterations,stop_reason,misfit,rel_l2_to_truth,rel_l2_to_exact_recon");
    std::optional<ConductivityField> exact_recon;
    for (auto [name, data] : {std::pair<std::string, const Eigen::MatrixXd *>{"exact", &L},
                              {"completed", &completed},
                              {"raw", &raw}}) {
        run.step("invert " + name, [&, name = name, data = data] {
            const auto res = gauss_newton(MisfitTarget::full(*data), icfg, g);
            if (name == "exact") exact_recon = res.field;
            write_field(run.artifact("recon_" + name + ".itom"), res.field);
            write_pgm(run.artifact("recon_" + name + ".pgm"), res.field, lo, hi);
            auto tr = run.csv("trace_" + name + ".csv", "iter,misfit,grad_norm,lambda,accepted");
            write_trace_csv(tr, res.trace);
            const double to_exact = exact_recon ? compare_reconstructions(*exact_recon, res.field).rel_l2 : NAN;
            dist << name << "," << res.iterations << "," << res.stop_reason << "," << fd(res.misfit) << ","
                 << fd(compare_reconstructions(truth, res.field).rel_l2) << "," << fd(to_exact) << "\n";
            // zero-filled data has no consistent conductivity; only the other two must converge
            if (!res.converged && name != "raw") return "FAILED: " + res.stop_reason;
            return res.stop_reason;
        });
    }
}

void rte_survey_exp(Run &run, const ExperimentConfig &cfg) {
    auto os = run.csv("rte_ranks.csv", "level,n_space,n_angles,knudsen,dimension,eps_rank,max_admissible_rank,max_col_sum_error,min_entry");
    for (int k : cfg.levels)
        for (double kn : cfg.knudsen)
            run.step("albedo level " + std::to_string(k) + " Kn " + fd(kn), [&] {
                const auto a = assemble_albedo(rte_refinement(k, kn));
                const int n = static_cast<int>(a.entries.rows());
                const auto part = build_partition(n, parse_admissibility(cfg.admissibility), std::min(cfg.min_block, n / 2));
                const auto rep = rank_survey(a.entries, part, cfg.eps);
                const double cs = (a.entries.colwise().sum().array() - 1).abs().maxCoeff();
                os << k << "," << a.n_space << "," << a.n_angles << "," << fd(kn) << "," << n << ","
                   << epsilon_rank(a.entries, cfg.eps) << "," << rep.max_admissible_rank() << "," << fd(cs) << ","
                   << fd(a.entries.minCoeff()) << "\n";
                const std::string stem = "albedo_l" + std::to_string(k) + "_kn" + fd(kn);
                write_itom(run.artifact(stem + ".itom"), FileKind::albedo, a.entries);
                std::ofstream(run.artifact(stem + ".json")) << albedo_sidecar_json(a) << "\n";
                const Eigen::MatrixXd lm = log_magnitude(a.entries);
                write_pgm(run.artifact(stem + ".pgm"), lm, -12, lm.maxCoeff());
                return cs <= 1e-8 ? std::string() : "FAILED: albedo columns do not conserve flux";
            });
    run.step("rte success sweep", [&] {
        const auto cells = rte_success_sweep(cfg.p_grid, cfg.levels, cfg.trials, cfg.sweep_knudsen, cfg.success_tol,
                                             completion_config(cfg), *cfg.seed);
        std::ofstream s(run.artifact("rte_sweep.csv"));
        write_sweep_csv(s, cells);
        write_heatmap(run, "rte_sweep.pgm", cells, cfg.levels, cfg.p_grid);
        return std::string();
    });
}

void refinement_exp(Run &run, const ExperimentConfig &cfg) {
    auto os = run.csv("refinement.csv", "field,coarse,fine,discrepancy");
    const std::pair<std::string, std::function<double(double, double)>> fields[] = {
        {"constant", [](double, double) { return 1.0; }}, {"bump", smooth_bump}};
    for (const auto &[name, a] : fields)
        run.step("refinement " + name, [&, name = name, a = a] {
            const auto rows = refinement_consistency(a, cfg.levels);
            bool decreasing = true;
            for (size_t k = 0; k < rows.size(); ++k) {
                os << name << "," << rows[k].coarse << "," << rows[k].fine << "," << fd(rows[k].discrepancy) << "\n";
                if (k && !(rows[k].discrepancy < rows[k - 1].discrepancy)) decreasing = false;
            }
            return decreasing ? std::string() : "FAILED: discrepancy not decreasing";
        });
    run.step("steklov", [&] {
        auto st = run.csv("steklov.csv", "level,eigenvalue,oracle,rel_error");
        const double oracle = steklov_square_first();
        for (int level : cfg.levels) {
            const auto g = GridSpec::from_level(level);
            const int c = g.cells_per_dim();
            const auto ev = steklov_eigenvalues(g, assemble_dtn(g, ConductivityField::constant(c, c, 1.0)).entries, 2);
            st << level << "," << fd(ev[1]) << "," << fd(oracle) << "," << fd(std::abs(ev[1] - oracle) / oracle) << "\n";
        }
        return std::string();
    });
}

} // namespace

ConductivityField make_phantom(const std::string &name, int nx) {
    if (name == "shepp-logan") return shepp_logan(nx, nx);
    if (name == "two-blob") return two_blob(nx, nx);
    if (name == "bump") return ConductivityField::sample(nx, nx, smooth_bump);
    if (name == "constant") return ConductivityField::constant(nx, nx, 1.0);
    throw std::invalid_argument("unknown phantom '" + name + "'");
}

void ExperimentConfig::set(const std::string &key, const std::string &value) {
    const std::string v = trim(value);
    if (key == "experiment") experiment = v;
    else if (key == "levels") levels = parse_list<int>(key, v);
    else if (key == "p_grid") p_grid = parse_list<double>(key, v);
    else if (key == "trials") trials = parse_number<int>(key, v);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
    else if (key == "eps") eps = parse_number<double>(key, v);
    else if (key == "success_tol") success_tol = parse_number<double>(key, v);
    else if (key == "min_block") min_block = parse_number<int>(key, v);
    else if (key == "admissibility") admissibility = v;
    else if (key == "phantom") phantom = v;
    else if (key == "budget_mode") budget_mode = v;
    else if (key == "budget_p") budget_p = parse_number<double>(key, v);
    else if (key == "budget_C") budget_C = parse_number<double>(key, v);
    else if (key == "rank_guess") rank_guess = parse_number<int>(key, v);
    else if (key == "param_grid") param_grid = parse_number<int>(key, v);
    else if (key == "max_iter") max_iter = parse_number<int>(key, v);
    else if (key == "reg_alpha") reg_alpha = parse_number<double>(key, v);
    else if (key == "knudsen") knudsen = parse_list<double>(key, v);
    else if (key == "sweep_knudsen") sweep_knudsen = parse_number<double>(key, v);
    else if (key == "output_dir") output_dir = v;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string &text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << "experiment = " << experiment << "\n"
       << "levels = " << join(levels) << "\n"
       << "p_grid = " << join(p_grid) << "\n"
       << "trials = " << trials << "\n"
       << "seed = " << (seed ? std::to_string(*seed) : "none") << "\n"
       << "eps = " << fd(eps) << "\n"
       << "success_tol = " << fd(success_tol) << "\n"
       << "min_block = " << min_block << "\n"
       << "admissibility = " << admissibility << "\n"
       << "phantom = " << phantom << "\n"
       << "budget_mode = " << budget_mode << "\n"
       << "budget_p = " << fd(budget_p) << "\n"
       << "budget_C = " << fd(budget_C) << "\n"
       << "rank_guess = " << rank_guess << "\n"
       << "param_grid = " << param_grid << "\n"
       << "max_iter = " << max_iter << "\n"
       << "reg_alpha = " << fd(reg_alpha) << "\n"
       << "knudsen = " << join(knudsen) << "\n"
       << "sweep_knudsen = " << fd(sweep_knudsen) << "\n";
    return os.str();
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void ExperimentConfig::validate() const {
    const auto &ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), experiment) == ids.end())
        throw std::invalid_argument("unknown experiment '" + experiment + "'");
    if (stochastic(experiment) && !seed) throw std::invalid_argument("experiment '" + experiment + "' needs an explicit seed");
    if (levels.empty()) throw std::invalid_argument("levels must not be empty");
    for (double p : p_grid)
        if (!(p >= 0 && p <= 1)) throw std::invalid_argument("p_grid values must lie in [0, 1]");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (!(eps > 0) || !(success_tol > 0)) throw std::invalid_argument("eps and success_tol must be positive");
    if (param_grid < 1 || max_iter < 0 || reg_alpha < 0) throw std::invalid_argument("invalid inversion settings");
    for (double k : knudsen)
        if (!(k > 0)) throw std::invalid_argument("Knudsen numbers must be positive");
    parse_admissibility(admissibility);
    parse_budget_mode(budget_mode);
    make_phantom(phantom, 1);
}

bool RunManifest::ok() const {
    return std::all_of(steps.begin(), steps.end(), [](const StepRecord &s) { return s.status == "ok"; });
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash;
    j["config"] = config_text;
    j["status"] = ok() ? "ok" : "failed";
    j["artifacts"] = artifacts;
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto &s : steps)
        j["steps"].push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"message", s.message}});
    return j.dump(2);
}

RunManifest run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    Run run(cfg);
    const std::string &id = cfg.experiment;
    if (id == "rank-survey") rank_survey_exp(run, cfg);
    else if (id == "coherence") coherence_exp(run, cfg);
    else if (id == "block-sweep") block_sweep_exp(run, cfg);
    else if (id == "full-pipeline") full_pipeline_exp(run, cfg);
    else if (id == "inversion-compare") inversion_compare_exp(run, cfg);
    else if (id == "rte-survey") rte_survey_exp(run, cfg);
    else refinement_exp(run, cfg);
    return run.finish();
}

} // namespace itomc
