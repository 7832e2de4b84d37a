#pragma once
// Nuclear-norm completion of low-rank blocks and assembly of a completed matrix.

#include "itomc/hpartition.hpp"
#include "itomc/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace itomc {

enum class SvdBackend { automatic, dense, randomized };

/// Inexact augmented Lagrangian method: singular-value soft-thresholding
/// alternated with projection onto the observed entries.
struct CompletionConfig {
    double penalty = 1.0;  ///< initial penalty, in units of 1/||P_Omega(D)||_2
    double growth = 1.05;  ///< penalty factor per iteration; 1 keeps it fixed
    double max_penalty_ratio = 1e12;
    int max_iter = 5000;
    double tol_rel = 1e-7;  ///< relative change of the low-rank iterate
    double tol_feas = 1e-8; ///< max abs violation on observed entries
    SvdBackend svd = SvdBackend::automatic;
    int dense_svd_max_dim = 64; ///< automatic backend uses a dense SVD up to this size
    int oversample = 10;
    int power_iters = 2;
    std::uint64_t seed = 0; ///< sketch seed for the randomized SVD
    bool trace = false;     ///< record per-iteration diagnostics (forms W densely)

    void validate() const;
};

/// Observed entries of one rows x cols block.
struct ObservedBlock {
    int rows = 0, cols = 0;
    std::vector<int> row, col;
    std::vector<double> value;

    /// Entries of `full` where the column-major indicator is set.
    static ObservedBlock from_pattern(const Eigen::MatrixXd &full, const std::vector<unsigned char> &pattern);
    std::size_t size() const { return value.size(); }
};

struct CompletionTrace {
    std::vector<double> fixed_point_residual; ///< ||W_k - W_{k-1}||_F of the thresholding input
    std::vector<double> nuclear_norm;         ///< ||A_k||_*
    std::vector<double> feasibility;          ///< max violation on observed entries
};

struct BlockCompletion {
    Eigen::MatrixXd X; ///< completion; equals the data on observed entries
    int iterations = 0;
    double feasibility = 0; ///< max |A - D| over observed entries at exit
    double rel_change = 0;
    int rank = 0;
    bool converged = false;
    CompletionTrace trace; ///< scaled units; empty unless cfg.trace
};

BlockCompletion complete_block(const ObservedBlock &obs, const CompletionConfig &cfg);

struct BlockReport {
    int block = 0;
    BlockTag tag = BlockTag::diagonal;
    long observed = 0, area = 0;
    int iterations = 0;
    double feasibility = 0;
    double distance = std::numeric_limits<double>::quiet_NaN(); ///< Frobenius, when ground truth is known
    int rank = 0;
    bool converged = true;
    bool success = true;
};

struct CompletionReport {
    double success_tol = 1e-4;
    bool relative = false;
    std::vector<BlockReport> blocks;

    bool all_success() const;
    bool all_converged() const;
    void write_csv(std::ostream &os) const;
};

struct AssembledCompletion {
    Eigen::MatrixXd matrix;
    CompletionReport report;
};

/// Copies diagonal blocks, completes each admissible block independently.
/// `observed` holds valid values at the mask entries; the rest is ignored.
AssembledCompletion complete_ito_matrix(const Eigen::MatrixXd &observed, const SamplingMask &mask,
                                        const BlockPartition &p, const CompletionConfig &cfg,
                                        const Eigen::MatrixXd *truth = nullptr, double success_tol = 1e-4,
                                        bool relative = false);

/// n * max_i ||P_W e_i||_2 for the span W of the orthonormal columns of `basis`.
double coherence(const Eigen::MatrixXd &basis);
/// Same quantity through the explicit projector B B^T.
double coherence_via_projector(const Eigen::MatrixXd &basis);
/// Max absolute entry of sum_{k<r} u_k v_k^T.
double delocalization(const Eigen::MatrixXd &U, const Eigen::MatrixXd &V, int r);

struct CoherenceReport {
    int r = 0;
    double mu_row = 0, mu_col = 0;
    double max_uv = 0;
    /// (n / r) max_i ||P_W e_i||^2, the customary normalization, for comparison.
    double mu_row_normalized = 0, mu_col_normalized = 0;
};
CoherenceReport coherence_report(const Eigen::MatrixXd &block, double eps = 1e-6);

struct SweepCell {
    int level = 0;
    double p = 0;
    int trials = 0, successes = 0;
    double ratio = 0, mean_err = 0;
    int max_iter_hit = 0;
};

using BlockSource = std::function<Eigen::MatrixXd(int level)>;

/// Success ratios of Bernoulli(p) completion over seeded trials. Trial t at a level
/// uses the same uniform draws for every p, so masks are nested in p.
std::vector<SweepCell> success_ratio_sweep(const BlockSource &source, const std::vector<double> &ps,
                                           const std::vector<int> &levels, int trials, double success_tol,
                                           const CompletionConfig &cfg, std::uint64_t seed, bool relative = false);

void write_sweep_csv(std::ostream &os, const std::vector<SweepCell> &cells);

/// Smallest p in the sweep at `level` whose ratio reaches `target`; NaN when none does.
double minimal_p(const std::vector<SweepCell> &cells, int level, double target);

} // namespace itomc
