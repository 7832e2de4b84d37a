#include "itomc/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace itomc {

const char *to_string(BudgetMode m) {
    switch (m) {
    case BudgetMode::bernoulli: return "bernoulli";
    case BudgetMode::uniform_m: return "uniform-m";
    default: return "theorem-budget";
    }
}

BudgetMode parse_budget_mode(const std::string &s) {
    if (s == "bernoulli") return BudgetMode::bernoulli;
    if (s == "uniform-m" || s == "uniform") return BudgetMode::uniform_m;
    if (s == "theorem-budget" || s == "theorem") return BudgetMode::theorem_budget;
    throw std::invalid_argument("unknown budget mode '" + s + "'");
}

void BudgetRule::validate() const {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("sampling probability must lie in [0, 1]");
    if (m < 0) throw std::invalid_argument("sample count must be non-negative");
    if (rank_guess < 1) throw std::invalid_argument("rank guess must be >= 1");
    if (!(C > 0)) throw std::invalid_argument("budget constant C must be positive");
    if (!(beta > 2)) throw std::invalid_argument("beta must exceed 2");
}

long theorem_budget(int side, int rank_guess, double C) {
    const double nb = side;
    return static_cast<long>(std::ceil(C * rank_guess * std::pow(nb, 1.2) * std::log(nb)));
}

bool SamplingMask::contains(int i, int j) const {
    return std::binary_search(entries.begin(), entries.end(), std::pair{i, j});
}

std::vector<unsigned char> SamplingMask::dense() const {
    std::vector<unsigned char> d(static_cast<size_t>(n) * n, 0);
    for (auto [i, j] : entries) d[static_cast<size_t>(i) * n + j] = 1;
    return d;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<unsigned char> bernoulli_pattern(int rows, int cols, double p, std::uint64_t seed) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("sampling probability must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<unsigned char> out(static_cast<size_t>(rows) * cols);
    for (auto &o : out) o = u(rng) < p;
    return out;
}

SamplingMask build_mask(const BlockPartition &p, const BudgetRule &rule, std::uint64_t seed) {
    rule.validate();
    SamplingMask mask;
    mask.n = p.n;
    mask.rule = rule;
    mask.seed = seed;
    mask.per_block.resize(p.blocks.size());
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const Block &b = p.blocks[k];
        auto &info = mask.per_block[k];
        info.area = b.area();
        info.tag = b.tag;
        const auto push = [&](long idx) {
            mask.entries.emplace_back(b.row_start + static_cast<int>(idx % b.row_len),
                                      b.col_start + static_cast<int>(idx / b.row_len));
        };
        if (b.tag == BlockTag::diagonal) {
            for (long idx = 0; idx < info.area; ++idx) push(idx);
            info.count = info.area;
            continue;
        }
        const std::uint64_t s = derive_seed(seed, k);
        if (rule.mode == BudgetMode::bernoulli) {
            const auto pat = bernoulli_pattern(b.row_len, b.col_len, rule.p, s);
            for (long idx = 0; idx < info.area; ++idx)
                if (pat[idx]) {
                    push(idx);
                    ++info.count;
                }
            continue;
        }
        long m = rule.m;
        if (rule.mode == BudgetMode::theorem_budget) {
            m = theorem_budget(std::min(b.row_len, b.col_len), rule.rank_guess, rule.C);
            if (m > info.area) {
                m = info.area;
                info.clamped = true;
            }
        } else if (m > info.area) {
            throw std::invalid_argument("uniform-m count exceeds block area in block " + std::to_string(k));
        }
        std::vector<long> pick;
        pick.reserve(m);
        std::mt19937_64 rng(s);
        std::vector<long> all(info.area);
        std::iota(all.begin(), all.end(), 0L);
        std::sample(all.begin(), all.end(), std::back_inserter(pick), m, rng);
        for (long idx : pick) push(idx);
        info.count = m;
    }
    std::sort(mask.entries.begin(), mask.entries.end());
    return mask;
}

void validate_mask(const SamplingMask &mask, const BlockPartition &p) {
    if (mask.n != p.n) throw std::invalid_argument("mask and partition sizes differ");
    if (mask.per_block.size() != p.blocks.size()) throw std::invalid_argument("per-block metadata does not match partition");
    if (!std::is_sorted(mask.entries.begin(), mask.entries.end()) ||
        std::adjacent_find(mask.entries.begin(), mask.entries.end()) != mask.entries.end())
        throw std::invalid_argument("mask entries must be sorted and unique");
    std::vector<long> count(p.blocks.size(), 0);
    for (auto [i, j] : mask.entries) {
        if (i < 0 || j < 0 || i >= p.n || j >= p.n) throw std::invalid_argument("mask entry out of range");
        ++count[p.find(i, j)];
    }
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        if (count[k] != mask.per_block[k].count)
            throw std::invalid_argument("per-block count mismatch in block " + std::to_string(k));
        if (p.blocks[k].tag == BlockTag::diagonal && count[k] != p.blocks[k].area())
            throw std::invalid_argument("diagonal block " + std::to_string(k) + " is not fully observed");
    }
}

MaskDensity mask_density(const SamplingMask &mask, const BlockPartition &p) {
    if (mask.n != p.n) throw std::invalid_argument("mask and partition sizes differ");
    MaskDensity d;
    std::vector<long> count(p.blocks.size(), 0);
    for (auto [i, j] : mask.entries) ++count[p.find(i, j)];
    for (size_t k = 0; k < p.blocks.size(); ++k)
        d.per_block.push_back(static_cast<double>(count[k]) / static_cast<double>(p.blocks[k].area()));
    d.global = static_cast<double>(mask.entries.size()) / (static_cast<double>(p.n) * p.n);
    return d;
}

void write_mask_csv(std::ostream &os, const SamplingMask &mask) {
    os << "i,j\n";
    for (auto [i, j] : mask.entries) os << i << ',' << j << '\n';
}

SamplingMask read_mask_csv(std::istream &is, const BlockPartition &p) {
    SamplingMask mask;
    mask.n = p.n;
    mask.per_block.resize(p.blocks.size());
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        mask.per_block[k].area = p.blocks[k].area();
        mask.per_block[k].tag = p.blocks[k].tag;
    }
    std::string line;
    if (!std::getline(is, line) || line.rfind("i,j", 0) != 0) throw std::invalid_argument("mask CSV must start with 'i,j'");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        int i = 0, j = 0;
        char comma = 0;
        std::istringstream ls(line);
        if (!(ls >> i >> comma >> j) || comma != ',') throw std::invalid_argument("bad mask CSV line '" + line + "'");
        if (i < 0 || j < 0 || i >= p.n || j >= p.n) throw std::invalid_argument("mask entry out of range");
        mask.entries.emplace_back(i, j);
        ++mask.per_block[p.find(i, j)].count;
    }
    std::sort(mask.entries.begin(), mask.entries.end());
    validate_mask(mask, p);
    return mask;
}

std::string mask_sidecar_json(const SamplingMask &mask, const BlockPartition &p) {
    nlohmann::ordered_json j;
    j["n"] = mask.n;
    j["seed"] = mask.seed;
    j["rule"] = {{"mode", to_string(mask.rule.mode)}, {"p", mask.rule.p}, {"m", mask.rule.m},
                 {"rank_guess", mask.rule.rank_guess}, {"C", mask.rule.C}, {"beta", mask.rule.beta}};
    j["observed"] = mask.entries.size();
    auto blocks = nlohmann::ordered_json::array();
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const auto &b = p.blocks[k];
        const auto &info = mask.per_block[k];
        blocks.push_back({{"row_start", b.row_start}, {"row_len", b.row_len}, {"col_start", b.col_start},
                          {"col_len", b.col_len}, {"tag", to_string(b.tag)}, {"count", info.count},
                          {"clamped", info.clamped}});
    }
    j["blocks"] = blocks;
    return j.dump(2);
}

} // namespace itomc
