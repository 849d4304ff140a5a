#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "pcssvm/cluster_pdf.hpp"
#include "pcssvm/dataset.hpp"
#include "pcssvm/kernel.hpp"
#include "pcssvm/resampling.hpp"
#include "pcssvm/smo.hpp"

namespace pcssvm {

/// A: most misclassified false-negative support vector. B: true-positive
/// support vector most similar to A. C: true-positive support vector most
/// similar to B, other than A and B.
struct TriplePick {
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    double k_ab = 0.0;
    double k_bc = 0.0;
};

enum class TripleStatus { ok, no_adjustment_needed, insufficient_positive_support };

inline const char* to_string(TripleStatus s) {
    switch (s) {
        case TripleStatus::ok: return "ok";
        case TripleStatus::no_adjustment_needed: return "no-adjustment-needed";
        case TripleStatus::insufficient_positive_support: return "insufficient-positive-support";
    }
    return "?";
}

struct TripleSelection {
    TripleStatus status = TripleStatus::no_adjustment_needed;
    std::optional<TriplePick> pick;
};

/// `decision` holds the model's decision values on the rows of `ds`.
inline TripleSelection select_triple(const SvmModel& model, const Dataset& ds, const SimilarityMatrix& w,
                                     const Eigen::VectorXd& decision) {
    if (w.size() != static_cast<Eigen::Index>(ds.size()) || decision.size() != w.size())
        throw DataError("select_triple: size mismatch between data, similarities and decision values");
    std::optional<std::size_t> a;
    std::vector<std::size_t> true_pos;
    for (auto t : model.support_indices) {
        if (ds.labels[t] != 1) continue;
        const double f = decision(static_cast<Eigen::Index>(t));
        if (f < 0.0) {
            if (!a || f < decision(static_cast<Eigen::Index>(*a))) a = t;
        } else {
            true_pos.push_back(t);
        }
    }
    if (!a) return {TripleStatus::no_adjustment_needed, std::nullopt};
    if (true_pos.size() < 2) return {TripleStatus::insufficient_positive_support, std::nullopt};

    auto most_similar = [&](std::size_t from, std::size_t skip) {
        std::optional<std::size_t> best;
        for (auto t : true_pos) {
            if (t == skip) continue;
            if (!best || w(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(t)) >
                             w(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(*best)))
                best = t;
        }
        return *best;
    };
    TriplePick p;
    p.a = *a;
    p.b = most_similar(p.a, p.a);
    p.c = most_similar(p.b, p.b);
    p.k_ab = w(static_cast<Eigen::Index>(p.a), static_cast<Eigen::Index>(p.b));
    p.k_bc = w(static_cast<Eigen::Index>(p.b), static_cast<Eigen::Index>(p.c));
    return {TripleStatus::ok, p};
}

inline TripleSelection select_triple(const SvmModel& model, const Dataset& ds, const SimilarityMatrix& w) {
    return select_triple(model, ds, w, model.decision_values(ds.features));
}

struct CPosResult {
    double c_pos = 1.0;
    double p_ab = 0.0;
    double p_bc = 0.0;
    double k_scale = 1.0;
    double bound = 0.0;  ///< p_ab / D when D > 0, else 0
    bool fallback_used = false;
    bool capped = false;
};

inline constexpr double kCPosSlack = 0.05;
inline constexpr double kCPosCap = 1e6;

/// C+ from the lower bound p_ab / (4 k_ab (p_ab - k p_bc) - p_ab), inflated
/// by the slack so the inequality holds strictly. When the denominator is not
/// positive the bound does not exist and `fallback_ratio` is used instead.
inline CPosResult compute_cpos(double k_ab, double p_ab, double p_bc, double k_scale, double fallback_ratio,
                               double slack = kCPosSlack, double cap = kCPosCap) {
    if (!(p_ab > 0.0) || !(p_bc > 0.0)) throw DomainError("compute_cpos: densities must be > 0");
    if (!(k_ab > 0.0 && k_ab < 1.0)) throw DomainError("compute_cpos: k_ab must lie in (0, 1)");
    if (!(fallback_ratio > 0.0)) throw DomainError("compute_cpos: fallback ratio must be > 0");
    CPosResult r;
    r.p_ab = p_ab;
    r.p_bc = p_bc;
    r.k_scale = k_scale;
    const double denom = 4.0 * k_ab * (p_ab - k_scale * p_bc) - p_ab;
    if (denom > 0.0) {
        r.bound = p_ab / denom;
        r.c_pos = (1.0 + slack) * r.bound;
    } else {
        r.fallback_used = true;
        r.c_pos = fallback_ratio;
    }
    if (r.c_pos > cap) {
        r.c_pos = cap;
        r.capped = true;
    }
    return r;
}

struct PcsOptions {
    BlockModelHyper hyper;
    BlockModelOptions block;
    double epsilon_w = kDefaultSimilarityEpsilon;
    double c_neg = 1.0;  ///< C- of the retrained model
    SvmParams solver;    ///< tolerances; penalties and kernel are overwritten
};

struct PcsResult {
    SvmModel model;
    SvmModel baseline;
    CPosResult cpos;
    TripleStatus status = TripleStatus::ok;
    std::optional<TriplePick> triple;
    std::optional<BlockModelPosterior> posterior;
    bool retrained = false;
};

/// Baseline SVM with C+ = C- = base_c, then (when a false-negative support
/// vector exists) a C+ derived from the block-model densities of the
/// selected triple, and a retrain with that C+ and C- = 1.
inline PcsResult train_pcs_svm(const Dataset& ds, const KernelSpec& kernel, double base_c, std::uint64_t seed,
                               const PcsOptions& opts = {}) {
    require_trainable(ds);
    if (!(base_c > 0.0)) throw DomainError("train_pcs_svm: base_c must be > 0");
    const GramMatrix g = gram(ds.features, kernel);
    SvmParams params = opts.solver;
    params.kernel = kernel;
    params.c_pos = base_c;
    params.c_neg = base_c;

    PcsResult out;
    out.baseline = train_smo(ds, g, params);
    const Eigen::VectorXd decision = training_decision_values(out.baseline, ds.labels, g.values);
    const SimilarityMatrix w = similarity_from_gram(g, opts.epsilon_w);
    const auto selection = select_triple(out.baseline, ds, w, decision);
    out.status = selection.status;
    out.triple = selection.pick;
    const double fallback = base_c * imbalance_ratio(ds);

    if (selection.status == TripleStatus::no_adjustment_needed) {
        out.model = out.baseline;
        out.cpos.c_pos = base_c;
        return out;
    }

    if (selection.status == TripleStatus::ok) {
        std::vector<int> init(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) init[i] = ds.labels[i] > 0 ? 0 : 1;
        BlockModelHyper hyper = opts.hyper;
        hyper.clusters = std::max(2, hyper.clusters);
        BlockModelOptions bopts = opts.block;
        bopts.seed = seed;
        auto post = fit_block_model(w, hyper, std::span<const int>(init), bopts);
        post.minority_cluster = identify_minority_cluster(post, ds.labels);
        // Densities that underflow are taken at the smallest positive double.
        constexpr double tiny = std::numeric_limits<double>::min();
        const auto& t = *selection.pick;
        const double p_ab = std::max(tiny, pair_density(post, t.k_ab, PairMode::cross));
        const double p_bc = std::max(tiny, pair_density(post, t.k_bc, PairMode::within_minority));
        out.cpos = compute_cpos(t.k_ab, p_ab, p_bc, 1.0, fallback);
        out.posterior = std::move(post);
    } else {
        out.cpos.c_pos = std::min(fallback, kCPosCap);
        out.cpos.fallback_used = true;
    }

    params.c_pos = out.cpos.c_pos;
    params.c_neg = opts.c_neg;
    out.model = train_smo(ds, g, params);
    out.retrained = true;
    return out;
}

/// SMOTE-balance the data, then run the PCS pipeline on the result.
inline PcsResult train_pcs_smote_svm(const Dataset& ds, const KernelSpec& kernel, double base_c, int smote_k,
                                     std::uint64_t seed, const PcsOptions& opts = {}) {
    ResamplePlan plan;
    plan.method = ResampleMethod::smote;
    plan.k_neighbors = smote_k;
    plan.seed = seed;
    return train_pcs_svm(smote(ds, plan), kernel, base_c, seed, opts);
}

/// key=value diagnostics written next to a serialized model.
inline void write_pcs_diagnostics(std::ostream& os, const PcsResult& r) {
    const auto old = os.precision(17);
    os << "status=" << to_string(r.status) << '\n';
    if (r.triple) {
        os << "triple_a=" << r.triple->a << "\ntriple_b=" << r.triple->b << "\ntriple_c=" << r.triple->c << '\n';
        os << "k_ab=" << r.triple->k_ab << "\nk_bc=" << r.triple->k_bc << '\n';
    }
    os << "p_ab=" << r.cpos.p_ab << "\np_bc=" << r.cpos.p_bc << "\nk_scale=" << r.cpos.k_scale << '\n';
    os << "c_pos=" << r.cpos.c_pos << "\nbound=" << r.cpos.bound << '\n';
    os << "fallback_used=" << (r.cpos.fallback_used ? 1 : 0) << "\ncapped=" << (r.cpos.capped ? 1 : 0) << '\n';
    os << "retrained=" << (r.retrained ? 1 : 0) << '\n';
    os.precision(old);
}

}  // namespace pcssvm
