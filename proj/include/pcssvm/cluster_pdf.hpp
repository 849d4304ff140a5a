#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "pcssvm/error.hpp"
#include "pcssvm/kernel.hpp"

namespace pcssvm {

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    [[nodiscard]] double mean() const noexcept { return alpha / (alpha + beta); }
};

inline double log_beta_function(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline double log_beta_pdf(double x, const BetaParams& p) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("beta density evaluated outside (0, 1)");
    if (!(p.alpha > 0.0 && p.beta > 0.0)) throw DomainError("beta shape parameters must be > 0");
    return (p.alpha - 1.0) * std::log(x) + (p.beta - 1.0) * std::log1p(-x) - log_beta_function(p.alpha, p.beta);
}

inline double beta_pdf(double x, const BetaParams& p) { return std::exp(log_beta_pdf(x, p)); }

struct MomentFit {
    BetaParams params;
    bool degenerate = false;  ///< zero variance; params are Beta(1, 1)
};

namespace detail {

inline constexpr double kShapeFloor = 1e-3;

inline MomentFit moments_to_beta(double mean, double var) {
    if (!(mean > 0.0 && mean < 1.0)) throw DomainError("sample mean must lie in (0, 1)");
    if (!(var > 0.0)) return {{1.0, 1.0}, true};
    const double common = mean * (1.0 - mean) / var - 1.0;
    return {{std::max(kShapeFloor, mean * common), std::max(kShapeFloor, (1.0 - mean) * common)}, false};
}

}  // namespace detail

/// Method-of-moments fit using the population variance.
inline MomentFit fit_beta_moments(std::span<const double> samples) {
    if (samples.size() < 2) throw DomainError("fit_beta_moments needs at least two samples");
    double mean = 0.0;
    for (double x : samples) {
        if (!(x > 0.0 && x < 1.0)) throw DomainError("beta samples must lie in (0, 1)");
        mean += x;
    }
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= static_cast<double>(samples.size());
    return detail::moments_to_beta(mean, var);
}

// ---------------------------------------------------------------------------
// Block model

/// Beta prior on the mean alpha/(alpha+beta) and log-normal prior on the
/// concentration alpha+beta.
struct ShapePrior {
    double mean_alpha = 2.0;
    double mean_beta = 2.0;
    double mu = 2.302585092994046;  // log 10
    double sigma2 = 1.0;

    void validate() const {
        if (!(mean_alpha > 0.0 && mean_beta > 0.0 && sigma2 > 0.0) || !std::isfinite(mu))
            throw DomainError("shape prior parameters must be positive");
    }

    [[nodiscard]] double log_density(double mean, double concentration) const {
        const double ls = std::log(concentration);
        return (mean_alpha - 1.0) * std::log(mean) + (mean_beta - 1.0) * std::log1p(-mean) -
               log_beta_function(mean_alpha, mean_beta) - ls - 0.5 * std::log(2.0 * M_PI * sigma2) -
               (ls - mu) * (ls - mu) / (2.0 * sigma2);
    }
};

struct BlockModelHyper {
    ShapePrior within;  ///< prior on every diagonal block
    ShapePrior off;     ///< prior on the off-diagonal block
    double lambda = 1.0;  ///< symmetric Dirichlet concentration
    int clusters = 2;

    void validate() const {
        within.validate();
        off.validate();
        if (!(lambda > 0.0)) throw DomainError("Dirichlet concentration must be > 0");
        if (clusters < 1) throw DomainError("cluster count must be >= 1");
    }
};

struct BlockModelOptions {
    int max_iters = 100;
    double tol = 1e-7;        ///< stop when the objective gains less than tol * max(1, |objective|)
    std::uint64_t seed = 0;   ///< random initialisation when no labels are given
    double init_confidence = 0.9;  ///< responsibility given to the init label
};

struct BlockModelPosterior {
    Eigen::MatrixXd responsibilities;  ///< n x K, rows on the simplex
    Eigen::VectorXd pi_weights;        ///< Dirichlet parameters of q(pi)
    std::vector<BetaParams> theta;     ///< per-cluster within-block densities
    BetaParams theta0;                 ///< cross-cluster density
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    int minority_cluster = -1;

    [[nodiscard]] int clusters() const noexcept { return static_cast<int>(theta.size()); }

    [[nodiscard]] std::vector<int> hard_labels() const {
        std::vector<int> out(static_cast<std::size_t>(responsibilities.rows()));
        for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
            Eigen::Index k = 0;
            responsibilities.row(i).maxCoeff(&k);
            out[static_cast<std::size_t>(i)] = static_cast<int>(k);
        }
        return out;
    }
};

namespace detail {

/// out_a[k] = sum_i q[i*K + k] a[i], and likewise for b; q is row-major n x K.
template <int K>
inline void weighted_dots_fixed(const double* q, const double* a, const double* b, Eigen::Index n, double* out_a,
                                double* out_b) {
    double sa[K] = {}, sb[K] = {};
    for (Eigen::Index i = 0; i < n; ++i, q += K) {
        for (int k = 0; k < K; ++k) {
            sa[k] += q[k] * a[i];
            sb[k] += q[k] * b[i];
        }
    }
    for (int k = 0; k < K; ++k) {
        out_a[k] = sa[k];
        out_b[k] = sb[k];
    }
}

inline void weighted_dots(const double* q, int K, const double* a, const double* b, Eigen::Index n, double* out_a,
                          double* out_b) {
    switch (K) {
        case 1: return weighted_dots_fixed<1>(q, a, b, n, out_a, out_b);
        case 2: return weighted_dots_fixed<2>(q, a, b, n, out_a, out_b);
        case 3: return weighted_dots_fixed<3>(q, a, b, n, out_a, out_b);
        case 4: return weighted_dots_fixed<4>(q, a, b, n, out_a, out_b);
        default: break;
    }
    for (int k = 0; k < K; ++k) out_a[k] = out_b[k] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i, q += K) {
        for (int k = 0; k < K; ++k) {
            out_a[k] += q[k] * a[i];
            out_b[k] += q[k] * b[i];
        }
    }
}

/// Responsibility-weighted sufficient statistics of one block.
struct BlockStats {
    double weight = 0.0;    // sum of pair weights
    double log_x = 0.0;     // sum w log W
    double log_1mx = 0.0;   // sum w log(1 - W)
};

inline double block_loglik(const BlockStats& s, const BetaParams& p) {
    return (p.alpha - 1.0) * s.log_x + (p.beta - 1.0) * s.log_1mx - s.weight * log_beta_function(p.alpha, p.beta);
}

inline double logit(double m) { return std::log(m) - std::log1p(-m); }
inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline constexpr double kMinLogit = -30.0;
inline constexpr double kMaxLogit = 30.0;
inline constexpr double kMinLogConc = -6.0;
inline constexpr double kMaxLogConc = 20.0;
inline constexpr double kOrderGap = 1e-6;  // in logit units

/// Log posterior of one block's shape parameters in (logit mean, log concentration).
struct ShapeObjective {
    const BlockStats& stats;
    const ShapePrior& prior;

    [[nodiscard]] BetaParams params(double u, double v) const {
        const double m = sigmoid(u);
        const double s = std::exp(v);
        return {m * s, (1.0 - m) * s};
    }

    [[nodiscard]] double value(double u, double v) const {
        const auto p = params(u, v);
        return block_loglik(stats, p) + prior.log_density(sigmoid(u), std::exp(v));
    }

    [[nodiscard]] std::array<double, 2> gradient(double u, double v) const {
        using boost::math::digamma;
        const auto p = params(u, v);
        const double m = sigmoid(u);
        const double s = p.alpha + p.beta;
        const double psi_s = digamma(s);
        const double da = stats.log_x - stats.weight * (digamma(p.alpha) - psi_s);
        const double db = stats.log_1mx - stats.weight * (digamma(p.beta) - psi_s);
        const double dm = s * m * (1.0 - m);
        const double gu = (da - db) * dm + (prior.mean_alpha - 1.0) * (1.0 - m) - (prior.mean_beta - 1.0) * m;
        const double gv = da * p.alpha + db * p.beta - 1.0 - (v - prior.mu) / prior.sigma2;
        return {gu, gv};
    }
};

/// Maximise a ShapeObjective over u in [u_lo, u_hi], starting from (u, v).
/// Only improving steps are accepted, so the objective never decreases.
inline BetaParams maximize_shape(const ShapeObjective& obj, BetaParams start, double u_lo, double u_hi) {
    double u = std::clamp(logit(start.mean()), u_lo, u_hi);
    double v = std::clamp(std::log(start.alpha + start.beta), kMinLogConc, kMaxLogConc);
    double f = obj.value(u, v);

    for (int iter = 0; iter < 100; ++iter) {
        const auto g = obj.gradient(u, v);
        // Central-difference Hessian of the analytic gradient.
        constexpr double h = 1e-5;
        const auto gu_p = obj.gradient(u + h, v);
        const auto gu_m = obj.gradient(u - h, v);
        const auto gv_p = obj.gradient(u, v + h);
        const auto gv_m = obj.gradient(u, v - h);
        const double huu = (gu_p[0] - gu_m[0]) / (2 * h);
        const double hvv = (gv_p[1] - gv_m[1]) / (2 * h);
        const double huv = 0.5 * ((gu_p[1] - gu_m[1]) + (gv_p[0] - gv_m[0])) / (2 * h);
        const double det = huu * hvv - huv * huv;

        double du = 0.0;
        double dv = 0.0;
        if (huu < 0.0 && det > 0.0) {
            du = -(hvv * g[0] - huv * g[1]) / det;
            dv = -(-huv * g[0] + huu * g[1]) / det;
        } else {
            const double norm = std::hypot(g[0], g[1]);
            if (norm == 0.0) break;
            du = g[0] / norm;
            dv = g[1] / norm;
        }

        bool moved = false;
        double step = 1.0;
        for (int half = 0; half < 50; ++half, step *= 0.5) {
            const double nu = std::clamp(u + step * du, u_lo, u_hi);
            const double nv = std::clamp(v + step * dv, kMinLogConc, kMaxLogConc);
            const double nf = obj.value(nu, nv);
            if (std::isfinite(nf) && nf > f) {
                const double gain = nf - f;
                u = nu;
                v = nv;
                f = nf;
                moved = gain > 1e-13 * std::max(1.0, std::abs(f));
                break;
            }
        }
        if (!moved) break;
    }
    return obj.params(u, v);
}

inline double dirichlet_expected_log(const Eigen::VectorXd& gamma, Eigen::Index k) {
    using boost::math::digamma;
    return digamma(gamma(k)) - digamma(gamma.sum());
}

}  // namespace detail

/// Mean-field variational fit of the beta block model on a similarity matrix.
///
/// Coordinate ascent over q(z_n) (sequential, one row at a time), q(pi), and
/// MAP point estimates of the block shapes under their priors. The
/// cross-cluster mean is kept strictly below every within-cluster mean by
/// constraining each shape update to the ordered region. Diagonal entries of
/// W are ignored.
inline BlockModelPosterior fit_block_model(const SimilarityMatrix& sim, const BlockModelHyper& hyper,
                                           std::optional<std::span<const int>> init_labels = std::nullopt,
                                           const BlockModelOptions& opts = {}) {
    hyper.validate();
    const Eigen::Index n = sim.size();
    const int K = hyper.clusters;
    if (K > n) throw DomainError("more clusters than nodes");
    if (n < 2) throw DomainError("block model needs at least two nodes");
    if (init_labels && static_cast<Eigen::Index>(init_labels->size()) != n)
        throw DomainError("init_labels length does not match the similarity matrix");

    Eigen::MatrixXd log_w(n, n);
    Eigen::MatrixXd log_1mw(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = sim.w(i, j);
            if (i != j && !(x > 0.0 && x < 1.0)) throw DomainError("similarity entries must lie in (0, 1)");
            log_w(i, j) = i == j ? 0.0 : std::log(x);
            log_1mw(i, j) = i == j ? 0.0 : std::log1p(-x);
        }
    }
    const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double total_log_x = 0.5 * log_w.sum();
    const double total_log_1mx = 0.5 * log_1mw.sum();

    BlockModelPosterior post;
    Eigen::MatrixXd& r = post.responsibilities;
    r.resize(n, K);
    if (K == 1) {
        r.setOnes();
    } else if (init_labels) {
        if (!(opts.init_confidence > 0.0 && opts.init_confidence <= 1.0))
            throw DomainError("init_confidence must lie in (0, 1]");
        const double hi = opts.init_confidence;
        const double lo = (1.0 - hi) / (K - 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int lab = (*init_labels)[static_cast<std::size_t>(i)];
            if (lab < 0 || lab >= K) throw DomainError("init label outside [0, K)");
            for (int k = 0; k < K; ++k) r(i, k) = k == lab ? hi : lo;
        }
    } else {
        // Seeded anchors: a random first node, then repeatedly the node least
        // similar to every anchor so far. Rows start as a softmax of their
        // similarity to each anchor.
        std::mt19937_64 rng(opts.seed);
        std::vector<Eigen::Index> anchors{std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng)};
        while (static_cast<int>(anchors.size()) < K) {
            Eigen::Index pick = 0;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                if (std::find(anchors.begin(), anchors.end(), i) != anchors.end()) continue;
                double closest = 0.0;
                for (auto a : anchors) closest = std::max(closest, sim.w(i, a));
                if (closest < best) {
                    best = closest;
                    pick = i;
                }
            }
            anchors.push_back(pick);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) {
                const auto a = anchors[static_cast<std::size_t>(k)];
                r(i, k) = i == a ? 1.0 : std::exp(10.0 * (sim.w(i, a) - 1.0));
            }
            r.row(i) /= r.row(i).sum();
        }
    }

    auto block_stats = [&](const Eigen::MatrixXd& lw_r, const Eigen::MatrixXd& l1w_r) {
        std::vector<detail::BlockStats> s(static_cast<std::size_t>(K) + 1);
        detail::BlockStats within_total;
        for (int k = 0; k < K; ++k) {
            const auto col = r.col(k);
            auto& b = s[static_cast<std::size_t>(k) + 1];
            b.weight = 0.5 * (col.sum() * col.sum() - col.squaredNorm());
            b.log_x = 0.5 * col.dot(lw_r.col(k));
            b.log_1mx = 0.5 * col.dot(l1w_r.col(k));
            within_total.weight += b.weight;
            within_total.log_x += b.log_x;
            within_total.log_1mx += b.log_1mx;
        }
        s[0] = {std::max(0.0, total_pairs - within_total.weight), total_log_x - within_total.log_x,
                total_log_1mx - within_total.log_1mx};
        return s;
    };

    auto update_pi = [&] { post.pi_weights = (r.colwise().sum().transpose().array() + hyper.lambda).matrix(); };

    auto objective = [&](const std::vector<detail::BlockStats>& s) {
        double obj = detail::block_loglik(s[0], post.theta0) + hyper.off.log_density(post.theta0.mean(),
                                                                                     post.theta0.alpha + post.theta0.beta);
        if (!std::isfinite(obj)) throw Error("non-finite block-model objective in the cross-cluster block");
        for (int k = 0; k < K; ++k) {
            const auto& p = post.theta[static_cast<std::size_t>(k)];
            const double term =
                detail::block_loglik(s[static_cast<std::size_t>(k) + 1], p) + hyper.within.log_density(p.mean(), p.alpha + p.beta);
            if (!std::isfinite(term))
                throw Error("non-finite block-model objective in block " + std::to_string(k));
            obj += term;
        }
        const Eigen::VectorXd& g = post.pi_weights;
        double e_log_pi_sum = 0.0;
        for (int k = 0; k < K; ++k) {
            const double elp = detail::dirichlet_expected_log(g, k);
            e_log_pi_sum += elp;
            obj += r.col(k).sum() * elp - (g(k) - 1.0) * elp + std::lgamma(g(k));
        }
        obj += std::lgamma(K * hyper.lambda) - K * std::lgamma(hyper.lambda) + (hyper.lambda - 1.0) * e_log_pi_sum -
               std::lgamma(g.sum());
        for (Eigen::Index i = 0; i < n; ++i)
            for (int k = 0; k < K; ++k)
                if (r(i, k) > 0.0) obj -= r(i, k) * std::log(r(i, k));
        if (!std::isfinite(obj)) throw Error("non-finite block-model objective in the assignment terms");
        return obj;
    };

    auto update_shapes = [&](const std::vector<detail::BlockStats>& s) {
        for (int k = 0; k < K; ++k) {
            const double u_lo = detail::logit(post.theta0.mean()) + detail::kOrderGap;
            auto& p = post.theta[static_cast<std::size_t>(k)];
            p = detail::maximize_shape({s[static_cast<std::size_t>(k) + 1], hyper.within}, p, u_lo, detail::kMaxLogit);
        }
        double u_hi = detail::kMaxLogit;
        for (const auto& p : post.theta) u_hi = std::min(u_hi, detail::logit(p.mean()) - detail::kOrderGap);
        post.theta0 = detail::maximize_shape({s[0], hyper.off}, post.theta0, detail::kMinLogit, u_hi);
    };

    // Initial shapes: weighted moments, then projected into the ordered region
    // and refined.
    {
        // One pass over the off-diagonal entries; W is symmetric.
        Eigen::MatrixXd wr = Eigen::MatrixXd::Zero(n, K);
        Eigen::MatrixXd w2r = Eigen::MatrixXd::Zero(n, K);
        double all_sum = 0.0, all_sq = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double* col = sim.w.col(j).data();
            for (Eigen::Index i = 0; i < n; ++i) {
                if (i == j) continue;
                const double x = col[i];
                all_sum += x;
                all_sq += x * x;
                for (int k = 0; k < K; ++k) {
                    wr(j, k) += x * r(i, k);
                    w2r(j, k) += x * x * r(i, k);
                }
            }
        }
        all_sum *= 0.5;
        all_sq *= 0.5;
        double used_w = 0.0, used_sum = 0.0, used_sq = 0.0;
        auto from_moments = [](double weight, double sum, double sq) {
            if (weight <= 1e-12) return BetaParams{1.0, 1.0};
            const double m = std::clamp(sum / weight, 1e-6, 1.0 - 1e-6);
            return detail::moments_to_beta(m, std::max(0.0, sq / weight - m * m)).params;
        };
        post.theta.resize(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const auto col = r.col(k);
            const double weight = 0.5 * (col.sum() * col.sum() - col.squaredNorm());
            const double sum = 0.5 * col.dot(wr.col(k));
            const double sq = 0.5 * col.dot(w2r.col(k));
            used_w += weight;
            used_sum += sum;
            used_sq += sq;
            post.theta[static_cast<std::size_t>(k)] = from_moments(weight, sum, sq);
        }
        post.theta0 = from_moments(total_pairs - used_w, all_sum - used_sum, all_sq - used_sq);
        double u_min = detail::kMaxLogit;
        for (const auto& p : post.theta) u_min = std::min(u_min, detail::logit(p.mean()));
        if (detail::logit(post.theta0.mean()) > u_min - 2 * detail::kOrderGap) {
            const double s = post.theta0.alpha + post.theta0.beta;
            const double m = detail::sigmoid(u_min - 2 * detail::kOrderGap);
            post.theta0 = {m * s, (1.0 - m) * s};
        }
    }
    // Both log matrices times r in one pass; W is symmetric, so column j
    // gives row j of each product.
    Eigen::MatrixXd lw_r(n, K), l1w_r(n, K);
    auto project = [&] {
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rr = r;
        Eigen::VectorXd a(K), b(K);
        for (Eigen::Index j = 0; j < n; ++j) {
            detail::weighted_dots(rr.data(), K, log_w.col(j).data(), log_1mw.col(j).data(), n, a.data(), b.data());
            lw_r.row(j) = a.transpose();
            l1w_r.row(j) = b.transpose();
        }
    };
    update_pi();
    project();
    auto stats = block_stats(lw_r, l1w_r);
    update_shapes(stats);
    post.objective_trace.push_back(objective(stats));

    Eigen::VectorXd logits(K);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (K > 1) {
            Eigen::VectorXd e_log_pi(K);
            Eigen::VectorXd d_alpha(K), d_beta(K), d_lognorm(K);
            const double lb0 = log_beta_function(post.theta0.alpha, post.theta0.beta);
            for (int k = 0; k < K; ++k) {
                const auto& p = post.theta[static_cast<std::size_t>(k)];
                e_log_pi(k) = detail::dirichlet_expected_log(post.pi_weights, k);
                d_alpha(k) = p.alpha - post.theta0.alpha;
                d_beta(k) = p.beta - post.theta0.beta;
                d_lognorm(k) = log_beta_function(p.alpha, p.beta) - lb0;
            }
            Eigen::RowVectorXd col_sums = r.colwise().sum();
            // Row-major mirror of r keeps each node's responsibilities adjacent.
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rr = r;
            Eigen::VectorXd lw_row(K), l1w_row(K), next(K);
            for (Eigen::Index i = 0; i < n; ++i) {
                // W is symmetric; columns are contiguous.
                detail::weighted_dots(rr.data(), K, log_w.col(i).data(), log_1mw.col(i).data(), n, lw_row.data(),
                                      l1w_row.data());
                for (int k = 0; k < K; ++k)
                    logits(k) = e_log_pi(k) + d_alpha(k) * lw_row(k) + d_beta(k) * l1w_row(k) -
                                d_lognorm(k) * (col_sums(k) - rr(i, k));
                const double mx = logits.maxCoeff();
                // Underflowing terms are zeroed rather than left subnormal.
                for (int k = 0; k < K; ++k) next(k) = logits(k) - mx < -700.0 ? 0.0 : std::exp(logits(k) - mx);
                next /= next.sum();
                for (int k = 0; k < K; ++k) {
                    col_sums(k) += next(k) - rr(i, k);
                    rr(i, k) = next(k);
                }
            }
            r = rr;
            update_pi();
            project();
            stats = block_stats(lw_r, l1w_r);
        }
        update_shapes(stats);
        const double obj = objective(stats);
        const double prev = post.objective_trace.back();
        post.objective_trace.push_back(obj);
        post.iterations = iter + 1;
        if (obj - prev < opts.tol * std::max(1.0, std::abs(obj))) {
            post.converged = true;
            break;
        }
    }
    return post;
}

/// Cluster with the largest responsibility mass on rows labelled +1.
inline int identify_minority_cluster(const BlockModelPosterior& post, std::span<const int> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != post.responsibilities.rows())
        throw DomainError("label count does not match the posterior");
    Eigen::RowVectorXd mass = Eigen::RowVectorXd::Zero(post.responsibilities.cols());
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] > 0) mass += post.responsibilities.row(static_cast<Eigen::Index>(i));
    Eigen::Index best = 0;
    mass.maxCoeff(&best);
    return static_cast<int>(best);
}

enum class PairMode { within_minority, cross };

/// P1(w) under the minority cluster's shape, or P0(w) under the cross-cluster shape.
inline double pair_density(const BlockModelPosterior& post, double w, PairMode mode) {
    if (mode == PairMode::cross) return beta_pdf(w, post.theta0);
    if (post.minority_cluster < 0 || post.minority_cluster >= post.clusters())
        throw DomainError("minority cluster not identified");
    return beta_pdf(w, post.theta[static_cast<std::size_t>(post.minority_cluster)]);
}

/// Responsibilities followed by the block parameters, for inspection.
inline void write_block_model_csv(const BlockModelPosterior& post, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    out << "# block,alpha,beta\n0," << post.theta0.alpha << ',' << post.theta0.beta << '\n';
    for (std::size_t k = 0; k < post.theta.size(); ++k)
        out << k + 1 << ',' << post.theta[k].alpha << ',' << post.theta[k].beta << '\n';
    out << "# row";
    for (Eigen::Index k = 0; k < post.responsibilities.cols(); ++k) out << ",r" << k + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < post.responsibilities.rows(); ++i) {
        out << i;
        for (Eigen::Index k = 0; k < post.responsibilities.cols(); ++k) out << ',' << post.responsibilities(i, k);
        out << '\n';
    }
}

}  // namespace pcssvm
