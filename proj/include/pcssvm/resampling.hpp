#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "pcssvm/dataset.hpp"
#include "pcssvm/error.hpp"

namespace pcssvm {

enum class ResampleMethod { rus, ros, smote };

struct ResamplePlan {
    ResampleMethod method = ResampleMethod::smote;
    int k_neighbors = 5;
    /// Explicit targets; when unset the plan balances the classes (RUS shrinks
    /// the majority to the minority size, ROS/SMOTE grow the minority).
    std::optional<std::size_t> target_pos;
    std::optional<std::size_t> target_neg;
    std::uint64_t seed = 0;
    /// Test hook: fixes the SMOTE interpolation weight instead of drawing it.
    std::optional<double> fixed_delta;
};

namespace detail {

inline std::vector<std::size_t> indices_of(const Dataset& ds, int label) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] == label) out.push_back(i);
    return out;
}

/// Appends `rows` (given as source indices) to a copy of `ds`.
inline Dataset append_rows(const Dataset& ds, const Eigen::MatrixXd& extra, const std::vector<std::int64_t>& origins) {
    Dataset out = ds;
    const auto n = ds.features.rows();
    out.features.conservativeResize(n + extra.rows(), Eigen::NoChange);
    out.features.bottomRows(extra.rows()) = extra;
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(extra.rows()), 1);
    out.origin.insert(out.origin.end(), origins.begin(), origins.end());
    return out;
}

inline std::int64_t origin_of(const Dataset& ds, std::size_t i) {
    return ds.origin.empty() ? static_cast<std::int64_t>(i) : ds.origin[i];
}

}  // namespace detail

/// Random undersampling of the negative class, without replacement. Kept rows
/// stay in their original order.
inline Dataset rus(const Dataset& ds, const ResamplePlan& plan) {
    const auto neg = detail::indices_of(ds, -1);
    const auto pos = detail::indices_of(ds, +1);
    const std::size_t target = plan.target_neg.value_or(pos.size());
    if (plan.target_pos && *plan.target_pos != pos.size())
        throw DataError("rus cannot change the positive count");
    if (target > neg.size()) throw DataError("rus target exceeds available negative rows");
    if (target == 0) throw DataError("rus target must be >= 1");

    std::vector<std::size_t> chosen = neg;
    std::mt19937_64 rng(plan.seed);
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(target);
    std::vector<char> keep(ds.size(), 0);
    for (auto i : pos) keep[i] = 1;
    for (auto i : chosen) keep[i] = 1;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (keep[i]) rows.push_back(i);
    return subset(ds, rows);
}

/// Random oversampling: positives duplicated uniformly with replacement and
/// appended after the original rows.
inline Dataset ros(const Dataset& ds, const ResamplePlan& plan) {
    const auto neg = detail::indices_of(ds, -1);
    const auto pos = detail::indices_of(ds, +1);
    if (pos.empty()) throw DataError("ros needs positive rows");
    if (plan.target_neg && *plan.target_neg != neg.size())
        throw DataError("ros cannot change the negative count");
    const std::size_t target = plan.target_pos.value_or(std::max(neg.size(), pos.size()));
    if (target < pos.size()) throw DataError("ros target below current positive count");

    const std::size_t extra = target - pos.size();
    std::mt19937_64 rng(plan.seed);
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(extra), ds.features.cols());
    std::vector<std::int64_t> origins(extra);
    for (std::size_t s = 0; s < extra; ++s) {
        const auto i = pos[pick(rng)];
        rows.row(static_cast<Eigen::Index>(s)) = ds.features.row(static_cast<Eigen::Index>(i));
        origins[s] = detail::origin_of(ds, i);
    }
    return detail::append_rows(ds, rows, origins);
}

/// Indices (into `pool`) of the k nearest rows to pool[self] by Euclidean
/// distance, self excluded, ties broken by lower index.
inline std::vector<std::size_t> nearest_neighbors(const Eigen::MatrixXd& x, const std::vector<std::size_t>& pool,
                                                  std::size_t self, int k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(pool.size());
    const auto anchor = x.row(static_cast<Eigen::Index>(pool[self]));
    for (std::size_t t = 0; t < pool.size(); ++t) {
        if (t == self) continue;
        dist.emplace_back((x.row(static_cast<Eigen::Index>(pool[t])) - anchor).squaredNorm(), t);
    }
    const auto kk = std::min(dist.size(), static_cast<std::size_t>(k));
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < kk; ++t) out.push_back(dist[t].second);
    return out;
}

/// SMOTE: each synthetic row is x + delta (x_nn - x) for a base positive x
/// (cycled in order), x_nn drawn from its k nearest positive neighbours and
/// delta ~ U[0, 1]. Synthetic rows inherit the base row's origin.
inline Dataset smote(const Dataset& ds, const ResamplePlan& plan) {
    const auto neg = detail::indices_of(ds, -1);
    const auto pos = detail::indices_of(ds, +1);
    if (plan.k_neighbors < 1) throw DataError("smote needs k_neighbors >= 1");
    if (plan.target_neg && *plan.target_neg != neg.size())
        throw DataError("smote cannot change the negative count");
    const std::size_t target = plan.target_pos.value_or(std::max(neg.size(), pos.size()));
    if (target < pos.size()) throw DataError("smote target below current positive count");
    const std::size_t extra = target - pos.size();
    if (extra == 0) return ds;
    if (pos.size() <= static_cast<std::size_t>(plan.k_neighbors))
        throw DataError("smote: minority count " + std::to_string(pos.size()) + " <= k_neighbors " +
                        std::to_string(plan.k_neighbors) + "; use a smaller k");

    std::vector<std::vector<std::size_t>> neighbors(pos.size());
    for (std::size_t t = 0; t < pos.size(); ++t)
        neighbors[t] = nearest_neighbors(ds.features, pos, t, plan.k_neighbors);

    std::mt19937_64 rng(plan.seed);
    std::uniform_int_distribution<int> pick_nn(0, plan.k_neighbors - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(extra), ds.features.cols());
    std::vector<std::int64_t> origins(extra);
    for (std::size_t s = 0; s < extra; ++s) {
        const std::size_t base = s % pos.size();
        const std::size_t nn = neighbors[base][static_cast<std::size_t>(pick_nn(rng))];
        const double delta = plan.fixed_delta ? *plan.fixed_delta : unit(rng);
        const auto x = ds.features.row(static_cast<Eigen::Index>(pos[base]));
        const auto y = ds.features.row(static_cast<Eigen::Index>(pos[nn]));
        rows.row(static_cast<Eigen::Index>(s)) = x + delta * (y - x);
        origins[s] = detail::origin_of(ds, pos[base]);
    }
    return detail::append_rows(ds, rows, origins);
}

inline Dataset resample(const Dataset& ds, const ResamplePlan& plan) {
    switch (plan.method) {
        case ResampleMethod::rus: return rus(ds, plan);
        case ResampleMethod::ros: return ros(ds, plan);
        case ResampleMethod::smote: return smote(ds, plan);
    }
    return ds;
}

}  // namespace pcssvm
