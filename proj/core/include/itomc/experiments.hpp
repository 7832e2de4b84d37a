#pragma once
// Experiment drivers: configuration, dispatch, CSV/PGM artifacts and a run manifest.

#include "itomc/grid_fem.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace itomc {

/// Experiment ids: rank-survey, coherence, block-sweep, full-pipeline,
/// inversion-compare, rte-survey, refinement-consistency.
struct ExperimentConfig {
    std::string experiment;
    std::vector<int> levels{6};
    std::vector<double> p_grid{0.1};
    int trials = 20;
    std::optional<std::uint64_t> seed; ///< required by stochastic experiments
    double eps = 1e-6;
    double success_tol = 1e-4;
    int min_block = 8;
    std::string admissibility = "strong-periodic";
    std::string phantom = "shepp-logan"; ///< shepp-logan | two-blob | bump | constant
    std::string budget_mode = "theorem-budget";
    double budget_p = 0.1;
    double budget_C = 0.5;
    int rank_guess = 5;
    int param_grid = 16;
    int max_iter = 100;
    double reg_alpha = 1e-7;
    std::vector<double> knudsen{0.03125, 1.0};
    double sweep_knudsen = 1.0;
    std::filesystem::path output_dir = "out";

    /// `key = value` lines, '#' starts a comment, lists are comma separated.
    static ExperimentConfig parse(const std::string &text);
    static ExperimentConfig from_file(const std::filesystem::path &path);
    /// Sets one key from its text value; throws on unknown keys or bad values.
    void set(const std::string &key, const std::string &value);
    /// Canonical key-value text (output_dir excluded).
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;
    void validate() const;
};

struct StepRecord {
    std::string name;
    std::string status; ///< ok | failed
    double seconds = 0;
    std::string message;
};

struct RunManifest {
    std::string experiment;
    std::string config_hash;
    std::string config_text;
    std::vector<std::string> artifacts; ///< relative to the output directory
    std::vector<StepRecord> steps;

    bool ok() const;
    std::string to_json() const;
};

/// Dispatches to the experiment, writes artifacts and manifest.json into cfg.output_dir.
RunManifest run_experiment(const ExperimentConfig &cfg);

/// Conductivity by name, sampled at pixel centres on an nx x nx grid.
ConductivityField make_phantom(const std::string &name, int nx);

} // namespace itomc
