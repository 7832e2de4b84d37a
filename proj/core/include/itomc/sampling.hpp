#pragma once
// Observation masks that respect a block partition.

#include "itomc/hpartition.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace itomc {

enum class BudgetMode { bernoulli, uniform_m, theorem_budget };
const char *to_string(BudgetMode m);
BudgetMode parse_budget_mode(const std::string &s);

struct BudgetRule {
    BudgetMode mode = BudgetMode::bernoulli;
    double p = 0.1;      ///< bernoulli
    long m = 0;          ///< uniform_m, per admissible block
    int rank_guess = 5;  ///< theorem_budget
    double C = 1.0;      ///< theorem_budget
    double beta = 2.1;   ///< recorded only; enters the failure probability, not the count

    void validate() const;
};

/// ceil(C r n_b^(6/5) ln n_b) for a block of side n_b.
long theorem_budget(int side, int rank_guess, double C);

struct BlockSampleInfo {
    long count = 0;
    long area = 0;
    BlockTag tag = BlockTag::diagonal;
    bool clamped = false; ///< budget exceeded the block area
};

struct SamplingMask {
    int n = 0;
    /// Observed pairs, sorted by (i, j), no duplicates.
    std::vector<std::pair<int, int>> entries;
    std::vector<BlockSampleInfo> per_block;
    BudgetRule rule;
    std::uint64_t seed = 0;

    bool contains(int i, int j) const;
    std::vector<unsigned char> dense() const; ///< row-major n*n indicator
};

/// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

SamplingMask build_mask(const BlockPartition &p, const BudgetRule &rule, std::uint64_t seed);

/// Throws if a diagonal entry is missing, the list is unsorted or has duplicates,
/// or the per-block counts disagree with the entries.
void validate_mask(const SamplingMask &mask, const BlockPartition &p);

struct MaskDensity {
    std::vector<double> per_block;
    double global = 0;
};
MaskDensity mask_density(const SamplingMask &mask, const BlockPartition &p);

/// Bernoulli(p) pattern for a single rows x cols block, column-major indicator.
/// Entry (i,j) is kept when its uniform draw u_ij < p, with draws depending only on
/// the seed, so patterns are nested in p.
std::vector<unsigned char> bernoulli_pattern(int rows, int cols, double p, std::uint64_t seed);

void write_mask_csv(std::ostream &os, const SamplingMask &mask);
/// JSON sidecar with rule, seed and per-block counts.
/// Reads the "i,j" CSV written by write_mask_csv and rebuilds per-block counts for `p`.
SamplingMask read_mask_csv(std::istream &is, const BlockPartition &p);

std::string mask_sidecar_json(const SamplingMask &mask, const BlockPartition &p);

} // namespace itomc
