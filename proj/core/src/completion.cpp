#include "itomc/completion.hpp"

#include "itomc/io.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace itomc {

void CompletionConfig::validate() const {
    if (!(penalty > 0)) throw std::invalid_argument("penalty must be positive");
    if (!(growth >= 1)) throw std::invalid_argument("penalty growth must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(tol_rel > 0) || !(tol_feas > 0)) throw std::invalid_argument("tolerances must be positive");
    if (oversample < 1 || power_iters < 0) throw std::invalid_argument("bad randomized SVD settings");
}

ObservedBlock ObservedBlock::from_pattern(const Eigen::MatrixXd &full, const std::vector<unsigned char> &pattern) {
    if (pattern.size() != static_cast<size_t>(full.size())) throw std::invalid_argument("pattern size mismatch");
    ObservedBlock o;
    o.rows = static_cast<int>(full.rows());
    o.cols = static_cast<int>(full.cols());
    for (int j = 0; j < o.cols; ++j)
        for (int i = 0; i < o.rows; ++i)
            if (pattern[i + static_cast<size_t>(o.rows) * j]) {
                o.row.push_back(i);
                o.col.push_back(j);
                o.value.push_back(full(i, j));
            }
    return o;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct LowRank {
    Eigen::MatrixXd U, V; // orthonormal columns
    Eigen::VectorXd s;
    int rank() const { return static_cast<int>(s.size()); }
};

Eigen::MatrixXd thin_q(const Eigen::MatrixXd &a) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

double frob_inner(const LowRank &a, const LowRank &b) {
    if (a.rank() == 0 || b.rank() == 0) return 0;
    const Eigen::MatrixXd uu = a.U.transpose() * b.U;
    const Eigen::MatrixXd vv = a.V.transpose() * b.V;
    return (uu.array() * vv.array() * (a.s * b.s.transpose()).array()).sum();
}

class Ialm {
  public:
    Ialm(const ObservedBlock &obs, const CompletionConfig &cfg) : obs_(obs), cfg_(cfg), rng_(cfg.seed) {
        // column-major order so the sparse value array lines up with observations
        order_.resize(obs.size());
        std::iota(order_.begin(), order_.end(), 0);
        std::sort(order_.begin(), order_.end(), [&](int x, int y) {
            return obs.col[x] != obs.col[y] ? obs.col[x] < obs.col[y] : obs.row[x] < obs.row[y];
        });
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(obs.size());
        for (int k : order_) t.emplace_back(obs.row[k], obs.col[k], 1.0);
        sp_.resize(obs.rows, obs.cols);
        sp_.setFromTriplets(t.begin(), t.end());
        if (static_cast<size_t>(sp_.nonZeros()) != obs.size())
            throw std::invalid_argument("duplicate observed entries");
        dense_ = cfg.svd == SvdBackend::dense ||
                 (cfg.svd == SvdBackend::automatic && std::min(obs.rows, obs.cols) <= cfg.dense_svd_max_dim);
    }

    BlockCompletion run() {
        BlockCompletion out;
        const size_t m = obs_.size();
        const int rows = obs_.rows, cols = obs_.cols;
        scale_ = 0;
        for (double v : obs_.value) scale_ = std::max(scale_, std::abs(v));
        if (scale_ == 0) {
            out.X = Eigen::MatrixXd::Zero(rows, cols);
            out.converged = true;
            return out;
        }
        b_.resize(m);
        for (size_t q = 0; q < m; ++q) b_[q] = obs_.value[order_[q]] / scale_;
        const double tol_feas = cfg_.tol_feas / scale_;

        set_sparse(b_);
        const double mu0 = cfg_.penalty / spectral_norm_sparse();
        double mu = mu0;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
        LowRank a;
        a.U.resize(rows, 0);
        a.V.resize(cols, 0);
        Eigen::VectorXd a_om = Eigen::VectorXd::Zero(m);
        Eigen::MatrixXd w_prev;

        for (int it = 1; it <= cfg_.max_iter; ++it) {
            const Eigen::VectorXd sv = b_ - a_om + y / mu;
            set_sparse(sv);
            if (cfg_.trace) {
                Eigen::MatrixXd w = low_rank_dense(a) + Eigen::MatrixXd(sp_);
                if (w_prev.size()) out.trace.fixed_point_residual.push_back((w - w_prev).norm());
                w_prev = std::move(w);
            }
            LowRank next = threshold(a, 1.0 / mu);
            const double an = next.s.squaredNorm();
            const double diff2 = std::max(0.0, an + a.s.squaredNorm() - 2 * frob_inner(next, a));
            out.rel_change = an > 0 ? std::sqrt(diff2 / an) : (diff2 > 0 ? 1.0 : 0.0);
            a = std::move(next);
            a_om = on_omega(a);
            const Eigen::VectorXd r = b_ - a_om;
            y += mu * r;
            const double feas = m ? r.cwiseAbs().maxCoeff() : 0.0;
            if (cfg_.trace) {
                out.trace.nuclear_norm.push_back(a.s.sum());
                out.trace.feasibility.push_back(feas);
            }
            out.iterations = it;
            out.feasibility = feas * scale_;
            mu = std::min(mu * cfg_.growth, mu0 * cfg_.max_penalty_ratio);
            if (feas <= tol_feas && out.rel_change <= cfg_.tol_rel) {
                out.converged = true;
                break;
            }
        }
        out.rank = a.rank();
        out.X = low_rank_dense(a) * scale_;
        for (size_t q = 0; q < m; ++q) out.X(obs_.row[order_[q]], obs_.col[order_[q]]) = obs_.value[order_[q]];
        return out;
    }

  private:
    void set_sparse(const Eigen::VectorXd &v) { std::copy(v.data(), v.data() + v.size(), sp_.valuePtr()); }

    Eigen::MatrixXd low_rank_dense(const LowRank &a) const {
        if (a.rank() == 0) return Eigen::MatrixXd::Zero(obs_.rows, obs_.cols);
        return a.U * a.s.asDiagonal() * a.V.transpose();
    }

    Eigen::VectorXd on_omega(const LowRank &a) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(obs_.size()));
        if (a.rank() == 0) return out;
        const Eigen::MatrixXd us = a.U * a.s.asDiagonal();
        for (size_t q = 0; q < obs_.size(); ++q)
            out[q] = us.row(obs_.row[order_[q]]).dot(a.V.row(obs_.col[order_[q]]));
        return out;
    }

    double spectral_norm_sparse() {
        std::normal_distribution<double> g;
        Eigen::VectorXd x(obs_.cols);
        for (auto &v : x) v = g(rng_);
        double s = 0;
        for (int k = 0; k < 50; ++k) {
            x.normalize();
            const Eigen::VectorXd y = sp_ * x;
            x = sp_.transpose() * y;
            const double s_new = std::sqrt(x.norm());
            if (std::abs(s_new - s) <= 1e-6 * s_new) return s_new;
            s = s_new;
        }
        return s > 0 ? s : 1.0;
    }

    // W = A + S applied to a block of vectors
    Eigen::MatrixXd apply(const LowRank &a, const Eigen::MatrixXd &x) const {
        Eigen::MatrixXd out = sp_ * x;
        if (a.rank()) out.noalias() += a.U * (a.s.asDiagonal() * (a.V.transpose() * x));
        return out;
    }
    Eigen::MatrixXd apply_t(const LowRank &a, const Eigen::MatrixXd &x) const {
        Eigen::MatrixXd out = sp_.transpose() * x;
        if (a.rank()) out.noalias() += a.V * (a.s.asDiagonal() * (a.U.transpose() * x));
        return out;
    }

    // singular-value soft-thresholding of W = A + S at level tau
    LowRank threshold(const LowRank &a, double tau) {
        const int rows = obs_.rows, cols = obs_.cols, mn = std::min(rows, cols);
        Eigen::MatrixXd U, V;
        Eigen::VectorXd sig;
        if (dense_) {
            const Eigen::MatrixXd w = low_rank_dense(a) + Eigen::MatrixXd(sp_);
            Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
            U = svd.matrixU();
            V = svd.matrixV();
            sig = svd.singularValues();
        } else {
            int k = std::min(a.rank() + cfg_.oversample, mn);
            while (true) {
                randomized_svd(a, k, U, sig, V);
                if (sig[k - 1] <= tau || k == mn) break;
                k = std::min(2 * k, mn);
            }
            warm_ = V;
        }
        int keep = 0;
        while (keep < sig.size() && sig[keep] > tau) ++keep;
        LowRank out;
        out.U = U.leftCols(keep);
        out.V = V.leftCols(keep);
        out.s = sig.head(keep).array() - tau;
        return out;
    }

    void randomized_svd(const LowRank &a, int k, Eigen::MatrixXd &U, Eigen::VectorXd &sig, Eigen::MatrixXd &V) {
        const int cols = obs_.cols;
        Eigen::MatrixXd v0(cols, k);
        const int warm = std::min<int>(static_cast<int>(warm_.cols()), k);
        if (warm) v0.leftCols(warm) = warm_.leftCols(warm);
        std::normal_distribution<double> g;
        for (int j = warm; j < k; ++j)
            for (int i = 0; i < cols; ++i) v0(i, j) = g(rng_);
        Eigen::MatrixXd q = thin_q(apply(a, v0));
        for (int it = 0; it < cfg_.power_iters; ++it) {
            const Eigen::MatrixXd v = thin_q(apply_t(a, q));
            q = thin_q(apply(a, v));
        }
        const Eigen::MatrixXd bt = apply_t(a, q); // cols x k, = B^T
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
        V = svd.matrixU();
        sig = svd.singularValues();
        U = q * svd.matrixV();
    }

    const ObservedBlock &obs_;
    const CompletionConfig &cfg_;
    std::mt19937_64 rng_;
    std::vector<int> order_;
    SpMat sp_;
    Eigen::VectorXd b_;
    double scale_ = 1;
    bool dense_ = false;
    Eigen::MatrixXd warm_;
};

} // namespace

BlockCompletion complete_block(const ObservedBlock &obs, const CompletionConfig &cfg) {
    cfg.validate();
    if (obs.rows < 1 || obs.cols < 1) throw std::invalid_argument("empty block");
    if (obs.row.size() != obs.value.size() || obs.col.size() != obs.value.size())
        throw std::invalid_argument("observation arrays differ in length");
    if (obs.value.empty()) throw std::invalid_argument("no observed entries");
    for (size_t q = 0; q < obs.size(); ++q) {
        if (obs.row[q] < 0 || obs.row[q] >= obs.rows || obs.col[q] < 0 || obs.col[q] >= obs.cols)
            throw std::invalid_argument("observed index out of range");
        if (!std::isfinite(obs.value[q])) throw std::invalid_argument("observed value is not finite");
    }
    if (obs.size() == static_cast<size_t>(obs.rows) * obs.cols) {
        // the constraint set is a single point
        BlockCompletion out;
        out.X.resize(obs.rows, obs.cols);
        for (size_t q = 0; q < obs.size(); ++q) out.X(obs.row[q], obs.col[q]) = obs.value[q];
        out.converged = true;
        out.rank = std::min(obs.rows, obs.cols);
        return out;
    }
    return Ialm(obs, cfg).run();
}

bool CompletionReport::all_success() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const BlockReport &b) { return b.success; });
}
bool CompletionReport::all_converged() const {
    return std::all_of(blocks.begin(), blocks.end(), [](const BlockReport &b) { return b.converged; });
}

void CompletionReport::write_csv(std::ostream &os) const {
    os << "block,tag,observed,area,iterations,feasibility,distance,rank,converged,success\n";
    for (const auto &b : blocks)
        os << b.block << ',' << to_string(b.tag) << ',' << b.observed << ',' << b.area << ',' << b.iterations << ','
           << format_double(b.feasibility) << ',' << format_double(b.distance) << ',' << b.rank << ','
           << b.converged << ',' << b.success << '\n';
}

AssembledCompletion complete_ito_matrix(const Eigen::MatrixXd &observed, const SamplingMask &mask,
                                        const BlockPartition &p, const CompletionConfig &cfg,
                                        const Eigen::MatrixXd *truth, double success_tol, bool relative) {
    if (observed.rows() != p.n || observed.cols() != p.n) throw std::invalid_argument("matrix and partition sizes differ");
    if (truth && (truth->rows() != p.n || truth->cols() != p.n)) throw std::invalid_argument("ground truth size differs");
    if (mask.n != p.n) throw std::invalid_argument("mask and partition sizes differ");

    // bucket observations by block
    std::vector<std::vector<std::pair<int, int>>> per(p.blocks.size());
    for (auto [i, j] : mask.entries) per[p.find(i, j)].emplace_back(i, j);
    for (size_t k = 0; k < p.blocks.size(); ++k)
        if (p.blocks[k].tag == BlockTag::diagonal && static_cast<long>(per[k].size()) != p.blocks[k].area())
            throw std::invalid_argument("diagonal block " + std::to_string(k) + " (rows " +
                                        std::to_string(p.blocks[k].row_start) + "+" + std::to_string(p.blocks[k].row_len) +
                                        ", cols " + std::to_string(p.blocks[k].col_start) + "+" +
                                        std::to_string(p.blocks[k].col_len) + ") is not fully observed");

    AssembledCompletion out;
    out.matrix = Eigen::MatrixXd::Zero(p.n, p.n);
    out.report.success_tol = success_tol;
    out.report.relative = relative;
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const Block &b = p.blocks[k];
        BlockReport rep;
        rep.block = static_cast<int>(k);
        rep.tag = b.tag;
        rep.area = b.area();
        rep.observed = static_cast<long>(per[k].size());
        auto dst = out.matrix.block(b.row_start, b.col_start, b.row_len, b.col_len);
        if (b.tag == BlockTag::diagonal) {
            dst = observed.block(b.row_start, b.col_start, b.row_len, b.col_len);
            rep.rank = std::min(b.row_len, b.col_len);
        } else if (per[k].empty()) {
            dst.setZero();
            rep.converged = false;
        } else {
            ObservedBlock ob;
            ob.rows = b.row_len;
            ob.cols = b.col_len;
            for (auto [i, j] : per[k]) {
                ob.row.push_back(i - b.row_start);
                ob.col.push_back(j - b.col_start);
                ob.value.push_back(observed(i, j));
            }
            CompletionConfig c = cfg;
            c.seed = derive_seed(cfg.seed, k);
            BlockCompletion bc = complete_block(ob, c);
            dst = bc.X;
            rep.iterations = bc.iterations;
            rep.feasibility = bc.feasibility;
            rep.rank = bc.rank;
            rep.converged = bc.converged;
        }
        if (truth) {
            const auto t = truth->block(b.row_start, b.col_start, b.row_len, b.col_len);
            rep.distance = (Eigen::MatrixXd(dst) - t).norm();
            if (relative && t.norm() > 0) rep.distance /= t.norm();
            rep.success = rep.distance <= success_tol;
        } else {
            rep.success = rep.converged;
        }
        out.report.blocks.push_back(rep);
    }
    return out;
}

namespace {
void check_orthonormal(const Eigen::MatrixXd &b) {
    const Eigen::MatrixXd g = b.transpose() * b - Eigen::MatrixXd::Identity(b.cols(), b.cols());
    if (g.size() && g.cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("basis columns are not orthonormal");
}
} // namespace

double coherence(const Eigen::MatrixXd &basis) {
    check_orthonormal(basis);
    if (basis.cols() == 0) return 0;
    return static_cast<double>(basis.rows()) * basis.rowwise().norm().maxCoeff();
}

double coherence_via_projector(const Eigen::MatrixXd &basis) {
    check_orthonormal(basis);
    const Eigen::MatrixXd proj = basis * basis.transpose();
    return static_cast<double>(basis.rows()) * proj.colwise().norm().maxCoeff();
}

double delocalization(const Eigen::MatrixXd &U, const Eigen::MatrixXd &V, int r) {
    if (r < 0 || r > U.cols() || r > V.cols()) throw std::invalid_argument("rank exceeds basis size");
    if (r == 0) return 0;
    return (U.leftCols(r) * V.leftCols(r).transpose()).cwiseAbs().maxCoeff();
}

CoherenceReport coherence_report(const Eigen::MatrixXd &block, double eps) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CoherenceReport rep;
    rep.r = static_cast<int>((svd.singularValues().array() > eps).count());
    if (rep.r == 0) return rep;
    const Eigen::MatrixXd U = svd.matrixU().leftCols(rep.r), V = svd.matrixV().leftCols(rep.r);
    rep.mu_row = coherence(U);
    rep.mu_col = coherence(V);
    rep.max_uv = delocalization(U, V, rep.r);
    rep.mu_row_normalized = static_cast<double>(U.rows()) / rep.r * U.rowwise().squaredNorm().maxCoeff();
    rep.mu_col_normalized = static_cast<double>(V.rows()) / rep.r * V.rowwise().squaredNorm().maxCoeff();
    return rep;
}

std::vector<SweepCell> success_ratio_sweep(const BlockSource &source, const std::vector<double> &ps,
                                           const std::vector<int> &levels, int trials, double success_tol,
                                           const CompletionConfig &cfg, std::uint64_t seed, bool relative) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    std::vector<SweepCell> out;
    for (int level : levels) {
        const Eigen::MatrixXd truth = source(level);
        const double tnorm = truth.norm();
        for (double p : ps) {
            SweepCell cell;
            cell.level = level;
            cell.p = p;
            cell.trials = trials;
            double err_sum = 0;
            for (int t = 0; t < trials; ++t) {
                const std::uint64_t s = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(level)), t);
                const auto pat = bernoulli_pattern(static_cast<int>(truth.rows()), static_cast<int>(truth.cols()), p, s);
                double err;
                if (std::find(pat.begin(), pat.end(), 1) == pat.end()) {
                    err = tnorm;
                } else {
                    CompletionConfig c = cfg;
                    c.seed = s;
                    const BlockCompletion bc = complete_block(ObservedBlock::from_pattern(truth, pat), c);
                    err = (bc.X - truth).norm();
                    if (!bc.converged) ++cell.max_iter_hit;
                }
                if (relative && tnorm > 0) err /= tnorm;
                err_sum += err;
                if (err <= success_tol) ++cell.successes;
            }
            cell.ratio = static_cast<double>(cell.successes) / trials;
            cell.mean_err = err_sum / trials;
            out.push_back(cell);
        }
    }
    return out;
}

void write_sweep_csv(std::ostream &os, const std::vector<SweepCell> &cells) {
    os << "level,p,trials,successes,ratio,mean_err,max_iter_hit\n";
    for (const auto &c : cells)
        os << c.level << ',' << format_double(c.p) << ',' << c.trials << ',' << c.successes << ','
           << format_double(c.ratio) << ',' << format_double(c.mean_err) << ',' << c.max_iter_hit << '\n';
}

double minimal_p(const std::vector<SweepCell> &cells, int level, double target) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto &c : cells)
        if (c.level == level && c.ratio >= target && !(c.p >= best)) best = c.p;
    return best;
}

} // namespace itomc
