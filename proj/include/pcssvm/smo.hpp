#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pcssvm/dataset.hpp"
#include "pcssvm/error.hpp"
#include "pcssvm/kernel.hpp"

namespace pcssvm {

/// Working-pair rule. first_order pairs the two extreme violators;
/// second_order keeps the first index and picks the partner with the largest
/// guaranteed objective gain (fewer updates on ill-conditioned kernels).
enum class PairSelection { first_order, second_order };

struct SvmParams {
    double c_pos = 1.0;  ///< box for y = +1
    double c_neg = 1.0;  ///< box for y = -1
    KernelSpec kernel = KernelSpec::rbf(1.0);
    double kkt_tol = 1e-3;
    double alpha_eps = 1e-8;
    /// Pair-update budget; 0 selects 100 * n.
    std::size_t max_updates = 0;
    PairSelection selection = PairSelection::first_order;
    /// Skip bound variables that cannot join a violating pair (ignored when
    /// an observer is attached).
    bool shrinking = true;

    void validate() const {
        if (!(c_pos > 0.0) || !(c_neg > 0.0)) throw DomainError("SVM penalties must be > 0");
        if (!(kkt_tol > 0.0) || !(alpha_eps > 0.0)) throw DomainError("SVM tolerances must be > 0");
        kernel.validate();
    }

    [[nodiscard]] double box(int label) const noexcept { return label > 0 ? c_pos : c_neg; }
};

/// One SMO pair step. `e_i`, `e_j` are decision errors f(x) - y taken with a
/// zero bias; only their difference enters the step.
struct AlphaUpdate {
    std::size_t i = 0;
    std::size_t j = 0;
    double e_i = 0.0;
    double e_j = 0.0;
    double eta = 0.0;
    double new_alpha_j = 0.0;
};

struct SvmModel {
    std::vector<double> alphas;  ///< one per training row
    double bias = 0.0;
    std::vector<std::size_t> support_indices;
    SvmParams params;
    Eigen::MatrixXd sv_features;  ///< rows of the training data at support_indices
    Eigen::VectorXd sv_coef;      ///< alpha_i * y_i at support_indices
    bool converged = true;
    std::size_t updates = 0;

    [[nodiscard]] double decision_value(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        double f = bias;
        for (Eigen::Index s = 0; s < sv_features.rows(); ++s)
            f += sv_coef(s) * kernel_value(params.kernel, sv_features.row(s), x);
        return f;
    }

    [[nodiscard]] Eigen::VectorXd decision_values(const Eigen::MatrixXd& x) const {
        Eigen::VectorXd f(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) f(i) = decision_value(x.row(i));
        return f;
    }

    /// sign(f) with sign(0) = +1.
    [[nodiscard]] int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        return decision_value(x) >= 0.0 ? 1 : -1;
    }

    [[nodiscard]] std::vector<int> predict_all(const Eigen::MatrixXd& x) const {
        std::vector<int> out(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(x.row(i));
        return out;
    }
};

/// K11 + K22 - 2 K12.
inline double standard_eta(double k11, double k22, double k12) noexcept { return k11 + k22 - 2.0 * k12; }

/// Denominator of the pair update once the quadratic slack penalty of the
/// opposite-sign pair (with C- = 1) is folded in:
/// K11 + K22 - 2 (K12 - 1/(4 C+) - 1/4).
inline double adjusted_eta(double k11, double k22, double k12, double c_pos) {
    if (!(c_pos > 0.0)) throw DomainError("adjusted_eta: c_pos must be > 0");
    return k11 + k22 - 2.0 * (k12 - 1.0 / (4.0 * c_pos) - 0.25);
}

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
inline double dual_objective(std::span<const double> alphas, std::span<const int> labels, const Eigen::MatrixXd& k) {
    const auto n = static_cast<Eigen::Index>(alphas.size());
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i) ay(i) = alphas[static_cast<std::size_t>(i)] * labels[static_cast<std::size_t>(i)];
    return Eigen::Map<const Eigen::VectorXd>(alphas.data(), n).sum() - 0.5 * ay.dot(k * ay);
}

/// f(x_i) over the training rows.
inline Eigen::VectorXd training_decision_values(const SvmModel& m, std::span<const int> labels,
                                                const Eigen::MatrixXd& k) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ay(i) = m.alphas[static_cast<std::size_t>(i)] * labels[static_cast<std::size_t>(i)];
    return (k * ay).array() + m.bias;
}

/// 1/2 ||w||^2 + C+ sum xi(+) + C- sum xi(-) at the model's (w, b) with
/// xi_i = max(0, 1 - y_i f(x_i)).
inline double primal_objective(const SvmModel& m, std::span<const int> labels, const Eigen::MatrixXd& k) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ay(i) = m.alphas[static_cast<std::size_t>(i)] * labels[static_cast<std::size_t>(i)];
    const Eigen::VectorXd kay = k * ay;
    double obj = 0.5 * ay.dot(kay);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        obj += m.params.box(y) * std::max(0.0, 1.0 - y * (kay(i) + m.bias));
    }
    return obj;
}

/// Number of training points violating the KKT trichotomy by more than `tol`:
/// alpha = 0 needs y f >= 1, 0 < alpha < C needs y f = 1, alpha = C needs y f <= 1.
inline std::size_t kkt_violations(const SvmModel& m, std::span<const int> labels, const Eigen::MatrixXd& k,
                                  double tol) {
    const Eigen::VectorXd f = training_decision_values(m, labels, k);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double a = m.alphas[i];
        const double c = m.params.box(labels[i]);
        const double margin = labels[i] * f(static_cast<Eigen::Index>(i));
        const bool at_zero = a <= m.params.alpha_eps;
        const bool at_box = a >= c - m.params.alpha_eps;
        bool ok = true;
        if (at_zero)
            ok = margin >= 1.0 - tol;
        else if (at_box)
            ok = margin <= 1.0 + tol;
        else
            ok = std::abs(margin - 1.0) <= tol;
        if (!ok) ++bad;
    }
    return bad;
}

/// Observer called after every applied pair update with the new dual objective.
using SmoObserver = std::function<void(const AlphaUpdate&, double dual_objective)>;

/// SMO on a precomputed Gram matrix with per-class boxes.
///
/// Working pair: see PairSelection. Stops when the maximal violation
/// (largest E_j - E_i among points that may move up / down) drops below
/// kkt_tol.
/// Pairs with eta <= 1e-12 take the full step to the nearest box bound.
/// `warm_start`, when given, must be feasible for `params` (inside the boxes,
/// sum(alpha y) = 0), e.g. the solution for a smaller C.
inline SvmModel train_smo(const Dataset& ds, const GramMatrix& g, const SvmParams& params,
                          const SmoObserver& observer = {}, std::span<const double> warm_start = {}) {
    require_trainable(ds);
    params.validate();
    const auto n = static_cast<Eigen::Index>(ds.size());
    if (g.size() != n) throw DataError("Gram matrix size does not match dataset");
    const Eigen::MatrixXd& k = g.values;
    const auto& y = ds.labels;
    constexpr double kTau = 1e-12;

    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - 1
    Eigen::VectorXd yv(n);
    for (Eigen::Index t = 0; t < n; ++t) yv(t) = y[static_cast<std::size_t>(t)];
    if (!warm_start.empty()) {
        if (static_cast<Eigen::Index>(warm_start.size()) != n) throw DataError("warm start size mismatch");
        Eigen::VectorXd ay(n);
        double bal = 0.0;
        double total = 0.0;
        for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t) {
            const double a = warm_start[t];
            if (!(a >= 0.0 && a <= params.box(y[t]))) throw DomainError("warm start outside the box constraints");
            alpha[t] = a;
            ay(static_cast<Eigen::Index>(t)) = a * y[t];
            bal += a * y[t];
            total += a;
        }
        if (std::abs(bal) > 1e-8 * std::max(1.0, total)) throw DomainError("warm start violates sum(alpha y) = 0");
        grad = (yv.array() * (k * ay).array() - 1.0).matrix();
    }
    const std::size_t budget = params.max_updates ? params.max_updates : 100 * static_cast<std::size_t>(n);

    auto up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < params.c_pos : alpha[t] > 0.0; };
    auto low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < params.c_neg; };
    // bit 0: in the up set, bit 1: in the low set
    std::vector<unsigned char> flags(static_cast<std::size_t>(n));
    auto set_flags = [&](std::size_t t) { flags[t] = static_cast<unsigned char>((up(t) ? 1 : 0) | (low(t) ? 2 : 0)); };
    for (std::size_t t = 0; t < flags.size(); ++t) set_flags(t);
    const Eigen::VectorXd kd = k.diagonal();

    SvmModel model;
    model.params = params;
    model.converged = false;
    double gap_hi = 0.0;
    double gap_lo = 0.0;
    std::size_t updates = 0;

    // Active set. Bound variables that cannot join a violating pair are set
    // aside periodically; the full gradient is rebuilt before stopping.
    std::vector<std::size_t> active(static_cast<std::size_t>(n));
    for (std::size_t t = 0; t < active.size(); ++t) active[t] = t;
    const bool shrinking = params.shrinking && !observer;
    const std::size_t shrink_every = std::min<std::size_t>(static_cast<std::size_t>(n), 1000);
    std::size_t until_shrink = shrink_every;
    auto rebuild_gradient = [&] {
        grad.setConstant(-1.0);
        for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t)
            if (alpha[t] != 0.0) grad.array() += (alpha[t] * y[t]) * yv.array() * k.col(static_cast<Eigen::Index>(t)).array();
        active.resize(static_cast<std::size_t>(n));
        for (std::size_t t = 0; t < active.size(); ++t) active[t] = t;
    };

    double m_up = 0.0;
    double m_low = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    auto scan = [&](std::size_t t, double r) {
        if ((flags[t] & 1) && r > m_up) {
            m_up = r;
            i = t;
        }
        if ((flags[t] & 2) && r < m_low) {
            m_low = r;
            j = t;
        }
    };
    auto reset_scan = [&] {
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        i = j = 0;
    };
    // The gradient update of one step also scans for the next pair.
    bool scanned = false;

    while (true) {
        if (!scanned) {
            reset_scan();
            for (auto t : active) scan(t, -y[t] * grad(static_cast<Eigen::Index>(t)));
        }
        scanned = false;
        gap_hi = m_up;
        gap_lo = m_low;
        if (m_up - m_low < params.kkt_tol) {
            if (active.size() < static_cast<std::size_t>(n)) {
                rebuild_gradient();
                until_shrink = shrink_every;
                continue;
            }
            model.converged = true;
            break;
        }
        if (updates >= budget) break;

        if (shrinking && --until_shrink == 0) {
            until_shrink = shrink_every;
            std::erase_if(active, [&](std::size_t t) {
                const double r = -y[t] * grad(static_cast<Eigen::Index>(t));
                if (flags[t] == 3) return false;
                return (flags[t] & 1) ? r < m_low : r > m_up;
            });
            if (std::find(active.begin(), active.end(), i) == active.end() ||
                std::find(active.begin(), active.end(), j) == active.end())
                continue;
        }

        const auto ii = static_cast<Eigen::Index>(i);
        if (params.selection == PairSelection::second_order) {
            double best_gain = -std::numeric_limits<double>::infinity();
            const double* ci = k.col(ii).data();
            for (auto t : active) {
                if (!(flags[t] & 2)) continue;
                const auto tt = static_cast<Eigen::Index>(t);
                const double b = m_up + y[t] * grad(tt);
                if (b <= 0.0) continue;
                double a = kd(ii) + kd(tt) - 2.0 * ci[t];
                if (a <= kTau) a = kTau;
                const double gain = b * b / a;
                if (gain > best_gain) {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        const auto jj = static_cast<Eigen::Index>(j);
        const double pair_gap = m_up + y[j] * grad(jj);
        const double eta = standard_eta(k(ii, ii), k(jj, jj), k(ii, jj));
        // alpha_i += y_i t, alpha_j -= y_j t keeps sum(alpha y) fixed.
        const double room_i = y[i] > 0 ? params.c_pos - alpha[i] : alpha[i];
        const double room_j = y[j] > 0 ? alpha[j] : params.c_neg - alpha[j];
        const double room = std::min(room_i, room_j);
        double step = eta > kTau ? pair_gap / eta : room;
        if (step >= room) step = room;

        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        if (step == room_i) alpha[i] = y[i] > 0 ? params.c_pos : 0.0;
        if (step == room_j) alpha[j] = y[j] > 0 ? 0.0 : params.c_neg;
        set_flags(i);
        set_flags(j);
        {
            const double* ci = k.col(ii).data();
            const double* cj = k.col(jj).data();
            double* gd = grad.data();
            reset_scan();
            for (auto t : active) {
                gd[t] += step * y[t] * (ci[t] - cj[t]);
                scan(t, -y[t] * gd[t]);
            }
            scanned = true;
        }
        ++updates;

        if (observer) {
            AlphaUpdate u{i, j, y[i] * grad(ii), y[j] * grad(jj), eta, alpha[j]};
            double obj = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) obj -= 0.5 * alpha[static_cast<std::size_t>(t)] * (grad(t) - 1.0);
            observer(u, obj);
        }
    }
    if (active.size() < static_cast<std::size_t>(n)) rebuild_gradient();

    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < static_cast<std::size_t>(n); ++t) {
        if (alpha[t] > 0.0 && alpha[t] < params.box(y[t])) {
            free_sum += -y[t] * grad(static_cast<Eigen::Index>(t));
            ++free_count;
        }
    }
    if (free_count > 0)
        model.bias = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(gap_hi) && std::isfinite(gap_lo))
        model.bias = 0.5 * (gap_hi + gap_lo);
    else
        model.bias = std::isfinite(gap_hi) ? gap_hi : (std::isfinite(gap_lo) ? gap_lo : 0.0);

    model.alphas = std::move(alpha);
    model.updates = updates;
    for (std::size_t t = 0; t < model.alphas.size(); ++t)
        if (model.alphas[t] > params.alpha_eps) model.support_indices.push_back(t);
    const auto m = static_cast<Eigen::Index>(model.support_indices.size());
    model.sv_features.resize(m, ds.features.cols());
    model.sv_coef.resize(m);
    for (Eigen::Index s = 0; s < m; ++s) {
        const auto t = model.support_indices[static_cast<std::size_t>(s)];
        model.sv_features.row(s) = ds.features.row(static_cast<Eigen::Index>(t));
        model.sv_coef(s) = model.alphas[t] * y[t];
    }
    return model;
}

inline SvmModel train_smo(const Dataset& ds, const SvmParams& params) {
    return train_smo(ds, gram(ds.features, params.kernel), params);
}

/// Cost-sensitive SVM with C+ / C- equal to the imbalance ratio.
inline SvmModel train_dec(const Dataset& ds, double base_c, const KernelSpec& kernel, SvmParams tmpl = {}) {
    require_trainable(ds);
    if (!(base_c > 0.0)) throw DomainError("train_dec: base_c must be > 0");
    tmpl.kernel = kernel;
    tmpl.c_neg = base_c;
    tmpl.c_pos = base_c * imbalance_ratio(ds);
    return train_smo(ds, tmpl);
}

}  // namespace pcssvm
