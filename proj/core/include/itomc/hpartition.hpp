#pragma once
// Dyadic block partitions of a cyclically indexed n x n matrix.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace itomc {

enum class Admissibility { weak, strong_periodic };
enum class BlockTag { diagonal, admissible };

const char *to_string(Admissibility a);
const char *to_string(BlockTag t);
Admissibility parse_admissibility(const std::string &s);

/// Rectangular block [row_start, row_start+row_len) x [col_start, col_start+col_len).
/// Dyadic blocks never wrap, so plain intervals suffice.
struct Block {
    int row_start = 0, row_len = 0;
    int col_start = 0, col_len = 0;
    BlockTag tag = BlockTag::diagonal;
    int level = 0; ///< depth in the quadtree, root = 0

    long area() const { return static_cast<long>(row_len) * col_len; }
    bool contains(int i, int j) const {
        return i >= row_start && i < row_start + row_len && j >= col_start && j < col_start + col_len;
    }
    bool operator==(const Block &) const = default;
};

struct BlockPartition {
    int n = 0;
    int levels = 0; ///< deepest block level
    Admissibility admissibility = Admissibility::weak;
    int min_block = 8;
    std::vector<Block> blocks;

    /// Index of the block containing (i, j).
    int find(int i, int j) const;
};

/// Gap between [a0, a0+la) and [b0, b0+lb) on the cycle Z_n; 0 when they overlap or touch.
int periodic_gap(int a0, int la, int b0, int lb, int n);

BlockPartition build_partition(int n, Admissibility mode, int min_block = 8);

/// Throws unless the blocks cover every index pair exactly once.
void check_tiling(const BlockPartition &p);

/// Count of singular values strictly above eps (absolute).
int epsilon_rank(const Eigen::Ref<const Eigen::MatrixXd> &m, double eps = 1e-6);
/// Singular values, descending.
Eigen::VectorXd singular_values(const Eigen::Ref<const Eigen::MatrixXd> &m);

struct RankReport {
    double eps = 1e-6;
    std::vector<int> ranks; ///< parallel to BlockPartition::blocks
    std::vector<BlockTag> tags;
    /// Largest rank over the non-diagonal blocks.
    int max_admissible_rank() const;
};

RankReport rank_survey(const Eigen::MatrixXd &m, const BlockPartition &p, double eps = 1e-6);

/// CSV rows (level,row_start,row_len,col_start,col_len,tag[,eps_rank]).
void write_partition_csv(std::ostream &os, const BlockPartition &p, const RankReport *ranks = nullptr);

/// Named test blocks on the n-cycle: "a" = rows [0,n/4) x cols [n/2,3n/4),
/// "b" = rows [0,n/8) x cols [n/4,3n/8).
Block named_block(int n, char name);

} // namespace itomc
