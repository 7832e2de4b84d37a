#include "itomc/hpartition.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace itomc {

const char *to_string(Admissibility a) { return a == Admissibility::weak ? "weak" : "strong-periodic"; }
const char *to_string(BlockTag t) { return t == BlockTag::diagonal ? "diagonal" : "admissible"; }

Admissibility parse_admissibility(const std::string &s) {
    if (s == "weak") return Admissibility::weak;
    if (s == "strong-periodic" || s == "strong") return Admissibility::strong_periodic;
    throw std::invalid_argument("unknown admissibility '" + s + "'");
}

int BlockPartition::find(int i, int j) const {
    for (size_t b = 0; b < blocks.size(); ++b)
        if (blocks[b].contains(i, j)) return static_cast<int>(b);
    throw std::out_of_range("index pair not covered by partition");
}

int periodic_gap(int a0, int la, int b0, int lb, int n) {
    const auto mod = [n](long v) { return static_cast<int>(((v % n) + n) % n); };
    // overlap test on the cycle
    const int d1 = mod(static_cast<long>(b0) - a0); // start of b seen from a0
    const int d2 = mod(static_cast<long>(a0) - b0);
    if (d1 < la || d2 < lb) return 0;
    return std::min(mod(static_cast<long>(b0) - (a0 + la)), mod(static_cast<long>(a0) - (b0 + lb)));
}

namespace {
void build_weak(std::vector<Block> &out, int start, int size, int level, int min_block) {
    if (size <= min_block) {
        out.push_back({start, size, start, size, BlockTag::diagonal, level});
        return;
    }
    const int h = size / 2;
    out.push_back({start, h, start + h, h, BlockTag::admissible, level + 1});
    out.push_back({start + h, h, start, h, BlockTag::admissible, level + 1});
    build_weak(out, start, h, level + 1, min_block);
    build_weak(out, start + h, h, level + 1, min_block);
}

void build_strong(std::vector<Block> &out, int r0, int c0, int size, int level, int n, int min_block) {
    if (periodic_gap(r0, size, c0, size, n) >= size) {
        out.push_back({r0, size, c0, size, BlockTag::admissible, level});
        return;
    }
    if (size <= min_block) {
        out.push_back({r0, size, c0, size, BlockTag::diagonal, level});
        return;
    }
    const int h = size / 2;
    for (int dr : {0, h})
        for (int dc : {0, h}) build_strong(out, r0 + dr, c0 + dc, h, level + 1, n, min_block);
}
} // namespace

BlockPartition build_partition(int n, Admissibility mode, int min_block) {
    if (min_block < 2) throw std::invalid_argument("min_block must be at least 2");
    if (n < min_block || n % min_block != 0 || ((n / min_block) & (n / min_block - 1)) != 0)
        throw std::invalid_argument("n = " + std::to_string(n) + " is not min_block * 2^k (min_block = " +
                                    std::to_string(min_block) + ")");
    BlockPartition p;
    p.n = n;
    p.admissibility = mode;
    p.min_block = min_block;
    if (mode == Admissibility::weak) build_weak(p.blocks, 0, n, 0, min_block);
    else build_strong(p.blocks, 0, 0, n, 0, n, min_block);
    p.levels = 1;
    for (const auto &b : p.blocks) p.levels = std::max(p.levels, b.level);
    return p;
}

void check_tiling(const BlockPartition &p) {
    std::vector<unsigned char> hit(static_cast<size_t>(p.n) * p.n, 0);
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const auto &b = p.blocks[k];
        if (b.row_start < 0 || b.col_start < 0 || b.row_start + b.row_len > p.n || b.col_start + b.col_len > p.n)
            throw std::logic_error("block " + std::to_string(k) + " leaves the index square");
        for (int i = b.row_start; i < b.row_start + b.row_len; ++i)
            for (int j = b.col_start; j < b.col_start + b.col_len; ++j)
                if (hit[static_cast<size_t>(i) * p.n + j]++)
                    throw std::logic_error("blocks overlap at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    if (std::find(hit.begin(), hit.end(), 0) != hit.end()) throw std::logic_error("blocks leave a gap");
}

Eigen::VectorXd singular_values(const Eigen::Ref<const Eigen::MatrixXd> &m) {
    if (m.size() == 0) return {};
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

int epsilon_rank(const Eigen::Ref<const Eigen::MatrixXd> &m, double eps) {
    const Eigen::VectorXd s = singular_values(m);
    return static_cast<int>((s.array() > eps).count());
}

int RankReport::max_admissible_rank() const {
    int r = 0;
    for (size_t k = 0; k < ranks.size(); ++k)
        if (tags.at(k) != BlockTag::diagonal) r = std::max(r, ranks[k]);
    return r;
}

RankReport rank_survey(const Eigen::MatrixXd &m, const BlockPartition &p, double eps) {
    if (m.rows() != p.n || m.cols() != p.n) throw std::invalid_argument("matrix and partition sizes differ");
    RankReport r;
    r.eps = eps;
    r.ranks.reserve(p.blocks.size());
    for (const auto &b : p.blocks) {
        r.ranks.push_back(epsilon_rank(m.block(b.row_start, b.col_start, b.row_len, b.col_len), eps));
        r.tags.push_back(b.tag);
    }
    return r;
}

void write_partition_csv(std::ostream &os, const BlockPartition &p, const RankReport *ranks) {
    os << "level,row_start,row_len,col_start,col_len,tag" << (ranks ? ",eps_rank" : "") << '\n';
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const auto &b = p.blocks[k];
        os << b.level << ',' << b.row_start << ',' << b.row_len << ',' << b.col_start << ',' << b.col_len << ','
           << to_string(b.tag);
        if (ranks) os << ',' << ranks->ranks.at(k);
        os << '\n';
    }
}

Block named_block(int n, char name) {
    if (n % 8 != 0) throw std::invalid_argument("named blocks need n divisible by 8");
    switch (name) {
    case 'a': return {0, n / 4, n / 2, n / 4, BlockTag::admissible, 2};
    case 'b': return {0, n / 8, n / 4, n / 8, BlockTag::admissible, 3};
    default: throw std::invalid_argument(std::string("unknown named block '") + name + "'");
    }
}

} // namespace itomc
