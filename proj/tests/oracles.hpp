#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pcssvm/pcssvm.hpp"

namespace oracle {

/// Direct kernel evaluation straight from the formulas.
inline double kernel(const pcssvm::KernelSpec& k, const std::vector<double>& x, const std::vector<double>& y) {
    double dot = 0.0;
    double dist = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        dist += (x[i] - y[i]) * (x[i] - y[i]);
    }
    switch (k.kind) {
        case pcssvm::KernelKind::linear: return dot;
        case pcssvm::KernelKind::polynomial: return std::pow(k.gamma * dot + k.coef0, k.degree);
        case pcssvm::KernelKind::rbf: return std::exp(-k.gamma * dist);
    }
    return 0.0;
}

/// Euclidean projection onto {0 <= a_i <= c_i, sum y_i a_i = 0} by bisection
/// on the multiplier of the equality constraint.
inline Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& c) {
    auto at = [&](double nu) {
        Eigen::VectorXd a(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) a(i) = std::clamp(z(i) - nu * y(i), 0.0, c(i));
        return a;
    };
    double lo = -1.0;
    double hi = 1.0;
    while (y.dot(at(lo)) < 0.0) lo *= 2.0;
    while (y.dot(at(hi)) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (y.dot(at(mid)) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return at(0.5 * (lo + hi));
}

/// Accelerated projected gradient ascent on the L1 dual
/// max 1'a - 1/2 a'Qa, Q_ij = y_i y_j K_ij, with per-class boxes.
inline double dual_qp(const Eigen::MatrixXd& k, const std::vector<int>& labels, double c_pos, double c_neg,
                      int iters = 20000) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::VectorXd y(n), c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = labels[static_cast<std::size_t>(i)];
        c(i) = y(i) > 0 ? c_pos : c_neg;
    }
    const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(k);
    const double lip = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff());
    auto value = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(q * a); };
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v = a;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - q * v;
        const Eigen::VectorXd next = project(v + grad / lip, y, c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        v = next + ((t - 1.0) / t_next) * (next - a);
        if (value(next) < value(a)) {
            v = next;
            t = 1.0;
        } else {
            t = t_next;
        }
        a = next;
    }
    return value(a);
}

/// Pairwise-count AUC with half credit for ties.
inline double auc(const std::vector<int>& labels, const std::vector<double>& f) {
    double num = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != -1) continue;
            pairs += 1.0;
            if (f[i] > f[j])
                num += 1.0;
            else if (f[i] == f[j])
                num += 0.5;
        }
    }
    return num / pairs;
}

inline double beta_draw(std::mt19937_64& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

struct Planted {
    pcssvm::SimilarityMatrix w;
    std::vector<int> truth;
};

/// Symmetric W with two planted blocks; within-block entries from
/// Beta(wa, wb), cross-block entries from Beta(ca, cb).
inline Planted planted_blocks(int n, int n_first, std::uint64_t seed, double wa = 8, double wb = 2, double ca = 2,
                              double cb = 8, double eps = 1e-3) {
    std::mt19937_64 rng(seed);
    Planted p;
    p.truth.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p.truth[static_cast<std::size_t>(i)] = i < n_first ? 0 : 1;
    p.w.epsilon = eps;
    p.w.w = Eigen::MatrixXd::Constant(n, n, 1.0 - eps);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool same = p.truth[static_cast<std::size_t>(i)] == p.truth[static_cast<std::size_t>(j)];
            const double x = std::clamp(same ? beta_draw(rng, wa, wb) : beta_draw(rng, ca, cb), eps, 1.0 - eps);
            p.w.w(i, j) = x;
            p.w.w(j, i) = x;
        }
    }
    return p;
}

/// Best agreement over both labelings of a two-cluster assignment.
inline double agreement(const std::vector<int>& a, const std::vector<int>& truth) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == truth[i];
    const double frac = static_cast<double>(same) / static_cast<double>(a.size());
    return std::max(frac, 1.0 - frac);
}

/// Random labelled Gaussian data with both classes present.
inline pcssvm::Dataset random_dataset(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    pcssvm::Dataset ds;
    ds.features.resize(n, d);
    ds.labels.resize(static_cast<std::size_t>(n));
    ds.origin.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int y = (i % 2 == 0) ? 1 : -1;
        ds.labels[static_cast<std::size_t>(i)] = y;
        ds.origin[static_cast<std::size_t>(i)] = i;
        for (int j = 0; j < d; ++j) ds.features(i, j) = g(rng) + (j == 0 ? 0.8 * y : 0.0);
    }
    for (int j = 0; j < d; ++j) ds.attribute_names.push_back("x" + std::to_string(j));
    return ds;
}

}  // namespace oracle
