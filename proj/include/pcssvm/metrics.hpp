#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "pcssvm/error.hpp"

namespace pcssvm {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// +1 is the positive class.
inline ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size()) throw DomainError("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const int p = predictions[i];
        if ((y != 1 && y != -1) || (p != 1 && p != -1)) throw DomainError("confusion: values must be +1 or -1");
        if (y == 1)
            (p == 1 ? c.tp : c.fn)++;
        else
            (p == 1 ? c.fp : c.tn)++;
    }
    return c;
}

struct Scores {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f_measure = 0.0;
    double g_mean = 0.0;
    /// Set when some ratio had a zero denominator and was reported as 0.
    bool zero_denominator = false;
};

/// F-measure (beta = 1) and G-mean from already computed rates.
inline Scores scores_from_rates(double sensitivity, double specificity, double precision) {
    Scores s;
    s.sensitivity = sensitivity;
    s.specificity = specificity;
    s.precision = precision;
    s.g_mean = std::sqrt(sensitivity * specificity);
    const double denom = precision + sensitivity;
    if (denom > 0.0)
        s.f_measure = 2.0 * precision * sensitivity / denom;
    else
        s.zero_denominator = true;
    return s;
}

inline Scores scores(const ConfusionCounts& c) {
    bool zero = false;
    auto ratio = [&zero](std::size_t num, std::size_t den) {
        if (den == 0) {
            zero = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    const double sens = ratio(c.tp, c.tp + c.fn);
    const double spec = ratio(c.tn, c.tn + c.fp);
    const double prec = ratio(c.tp, c.tp + c.fp);
    Scores s = scores_from_rates(sens, spec, prec);
    s.zero_denominator = s.zero_denominator || zero;
    return s;
}

/// Mann-Whitney AUC; tied decision values earn half credit.
inline double auc(std::span<const int> labels, std::span<const double> decision) {
    if (labels.size() != decision.size()) throw DomainError("auc: length mismatch");
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return decision[a] < decision[b]; });

    double pos = 0.0;
    double neg = 0.0;
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && decision[order[j]] == decision[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                pos += 1.0;
                pos_rank_sum += mid_rank;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) throw DomainError("auc needs both classes");
    return (pos_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace pcssvm
