#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pcssvm/pcs.hpp"

using namespace pcssvm;

namespace {

std::size_t false_negatives(const SvmModel& m, const Dataset& ds) {
    const auto pred = m.predict_all(ds.features);
    std::size_t fn = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) fn += ds.labels[i] == 1 && pred[i] == -1;
    return fn;
}

double recall(const SvmModel& m, const Dataset& ds) {
    return 1.0 - static_cast<double>(false_negatives(m, ds)) / static_cast<double>(ds.positives());
}

}  // namespace

TEST(CPos, WorkedExample) {
    const auto r = compute_cpos(0.8, 0.6, 0.3, 1.0, 2.0);
    EXPECT_NEAR(r.bound, 0.6 / 0.36, 1e-12);
    EXPECT_NEAR(r.bound, 1.6667, 1e-4);
    EXPECT_NEAR(r.c_pos, 1.75, 1e-12);
    EXPECT_FALSE(r.fallback_used);
    EXPECT_GT(r.c_pos, r.bound);
}

TEST(CPos, EqualDensitiesFallBack) {
    const auto r = compute_cpos(0.7, 0.4, 0.4, 1.0, 3.5);
    EXPECT_TRUE(r.fallback_used);
    EXPECT_DOUBLE_EQ(r.c_pos, 3.5);
}

TEST(CPos, VanishingMinorityDensity) {
    const auto r = compute_cpos(0.5, 1.0, std::numeric_limits<double>::min(), 1.0, 9.0);
    EXPECT_NEAR(r.bound, 1.0, 1e-12);
    EXPECT_NEAR(r.c_pos, 1.05, 1e-12);
}

TEST(CPos, CapAndErrors) {
    const auto r = compute_cpos(0.25 + 1e-9, 1.0, 1e-300, 1.0, 2.0);
    EXPECT_TRUE(r.capped);
    EXPECT_DOUBLE_EQ(r.c_pos, kCPosCap);
    EXPECT_THROW((void)compute_cpos(0.5, 0.0, 0.1, 1.0, 1.0), DomainError);
    EXPECT_THROW((void)compute_cpos(0.5, 0.1, -1.0, 1.0, 1.0), DomainError);
    EXPECT_THROW((void)compute_cpos(1.0, 0.1, 0.1, 1.0, 1.0), DomainError);
}

TEST(CPos, FallbackIffDenominatorNonPositive) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> k(0.001, 0.999), p(0.01, 5.0);
    for (int i = 0; i < 2000; ++i) {
        const double kab = k(rng), pab = p(rng), pbc = p(rng);
        const auto r = compute_cpos(kab, pab, pbc, 1.0, 1.5);
        EXPECT_EQ(r.fallback_used, 4.0 * kab * (pab - pbc) - pab <= 0.0);
    }
}

TEST(Triple, ContrivedSingleFalseNegative) {
    Dataset ds;
    ds.features = Eigen::MatrixXd::Zero(4, 1);
    ds.labels = {1, 1, 1, -1};
    SvmModel m;
    m.support_indices = {0, 1, 2, 3};
    SimilarityMatrix w{Eigen::MatrixXd::Constant(4, 4, 0.5), 1e-3};
    w.w(0, 1) = w.w(1, 0) = 0.6;
    w.w(0, 2) = w.w(2, 0) = 0.9;
    w.w(1, 2) = w.w(2, 1) = 0.7;
    Eigen::VectorXd f(4);
    f << -0.5, 0.7, 0.9, -1.0;
    const auto sel = select_triple(m, ds, w, f);
    ASSERT_EQ(sel.status, TripleStatus::ok);
    EXPECT_EQ(sel.pick->a, 0u);
    EXPECT_EQ(sel.pick->b, 2u);
    EXPECT_EQ(sel.pick->c, 1u);
    EXPECT_DOUBLE_EQ(sel.pick->k_ab, 0.9);
    EXPECT_DOUBLE_EQ(sel.pick->k_bc, 0.7);

    f << 0.5, 0.7, 0.9, -1.0;
    EXPECT_EQ(select_triple(m, ds, w, f).status, TripleStatus::no_adjustment_needed);
    f << -0.5, -0.7, 0.9, -1.0;
    const auto sel2 = select_triple(m, ds, w, f);
    EXPECT_EQ(sel2.status, TripleStatus::insufficient_positive_support);
}

TEST(Triple, PlantedMatchesExhaustiveScan) {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 20 && checked < 5; ++seed) {
        const auto ds = synth_imbalanced(150, 15, 1.5, seed);
        SvmParams p;
        p.kernel = KernelSpec::rbf(0.5);
        const auto g = gram(ds.features, p.kernel);
        const auto m = train_smo(ds, g, p);
        const auto w = similarity_from_gram(g);
        const auto sel = select_triple(m, ds, w);
        if (sel.status != TripleStatus::ok) continue;
        ++checked;
        const Eigen::VectorXd f = m.decision_values(ds.features);
        const auto& t = *sel.pick;
        EXPECT_EQ(ds.labels[t.a], 1);
        EXPECT_LT(f(static_cast<Eigen::Index>(t.a)), 0.0);
        double best = -1.0;
        std::size_t arg = 0;
        for (auto s : m.support_indices) {
            if (ds.labels[s] != 1 || f(static_cast<Eigen::Index>(s)) < 0.0) continue;
            if (w(static_cast<Eigen::Index>(t.a), static_cast<Eigen::Index>(s)) > best) {
                best = w(static_cast<Eigen::Index>(t.a), static_cast<Eigen::Index>(s));
                arg = s;
            }
        }
        EXPECT_EQ(t.b, arg);
        EXPECT_NE(t.c, t.a);
        EXPECT_NE(t.c, t.b);
        EXPECT_GE(f(static_cast<Eigen::Index>(t.c)), 0.0);
    }
    EXPECT_GE(checked, 1);
}

TEST(Pcs, NoFalseNegativeReturnsBaseline) {
    const auto ds = synth_imbalanced(40, 40, 12.0, 1);
    const auto r = train_pcs_svm(ds, KernelSpec::linear(), 1.0, 1);
    EXPECT_EQ(r.status, TripleStatus::no_adjustment_needed);
    EXPECT_FALSE(r.retrained);
    EXPECT_FALSE(r.cpos.fallback_used);
    EXPECT_FALSE(r.triple.has_value());
    EXPECT_EQ(r.model.alphas, r.baseline.alphas);
    EXPECT_EQ(r.model.bias, r.baseline.bias);
}

TEST(Pcs, RecallNotWorseThanBaseline) {
    const auto ds = synth_imbalanced(200, 10, 1.5, 3);
    const auto r = train_pcs_svm(ds, KernelSpec::rbf(0.5), 1.0, 3);
    EXPECT_GE(recall(r.model, ds), recall(r.baseline, ds));
}

TEST(Pcs, Deterministic) {
    const auto ds = synth_imbalanced(120, 12, 1.5, 5);
    const auto a = train_pcs_svm(ds, KernelSpec::polynomial(2), 1.0, 9);
    const auto b = train_pcs_svm(ds, KernelSpec::polynomial(2), 1.0, 9);
    ASSERT_EQ(a.model.alphas.size(), b.model.alphas.size());
    for (std::size_t i = 0; i < a.model.alphas.size(); ++i) EXPECT_NEAR(a.model.alphas[i], b.model.alphas[i], 1e-12);
}

TEST(Pcs, AdjustedRunsRespectBound) {
    int adjusted = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto ds = synth_imbalanced(150, 15, 1.5, seed);
        const auto r = train_pcs_svm(ds, KernelSpec::polynomial(2), 1.0, seed);
        if (r.status != TripleStatus::ok) continue;
        EXPECT_TRUE(r.retrained);
        EXPECT_DOUBLE_EQ(r.model.params.c_neg, 1.0);
        EXPECT_DOUBLE_EQ(r.model.params.c_pos, r.cpos.c_pos);
        if (!r.cpos.fallback_used) {
            ++adjusted;
            EXPECT_GT(r.cpos.c_pos, r.cpos.bound);
            EXPECT_GE(r.cpos.c_pos, 1.0);
        } else {
            EXPECT_DOUBLE_EQ(r.cpos.c_pos, std::min(kCPosCap, imbalance_ratio(ds)));
        }
        ASSERT_TRUE(r.posterior.has_value());
        EXPECT_GE(r.posterior->minority_cluster, 0);
    }
    EXPECT_GT(adjusted, 0);
}

TEST(Pcs, FalseNegativesDoNotGrow) {
    int ok = 0;
    int total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = synth_imbalanced(150, 15, 1.5, 100 + seed);
        const auto r = train_pcs_svm(ds, KernelSpec::rbf(0.5), 1.0, seed);
        if (r.status != TripleStatus::ok) continue;
        ++total;
        ok += false_negatives(r.model, ds) <= false_negatives(r.baseline, ds);
    }
    ASSERT_GT(total, 0);
    EXPECT_GE(static_cast<double>(ok), 0.8 * total);
}

TEST(PcsSmote, BalancedInputMatchesPcs) {
    const auto ds = synth_imbalanced(30, 30, 1.0, 2);
    const auto a = train_pcs_smote_svm(ds, KernelSpec::rbf(0.5), 1.0, 5, 4);
    const auto b = train_pcs_svm(ds, KernelSpec::rbf(0.5), 1.0, 4);
    EXPECT_EQ(a.model.alphas, b.model.alphas);
    EXPECT_EQ(a.cpos.c_pos, b.cpos.c_pos);
}

TEST(Pcs, DiagnosticsRecord) {
    const auto ds = synth_imbalanced(150, 15, 1.5, 1);
    const auto r = train_pcs_svm(ds, KernelSpec::rbf(0.5), 1.0, 1);
    std::ostringstream os;
    write_pcs_diagnostics(os, r);
    const auto text = os.str();
    for (const char* key : {"status=", "p_ab=", "p_bc=", "c_pos=", "fallback_used="})
        EXPECT_NE(text.find(key), std::string::npos) << key;
}
