#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pcssvm/kernel.hpp"

using namespace pcssvm;

TEST(Kernel, ClosedForms) {
    Eigen::RowVector2d a(1, 0), b(0, 1), c(1, 1);
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::rbf(0.7), c, c), 1.0);
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::linear(), a, b), 0.0);
    EXPECT_DOUBLE_EQ(kernel_value(KernelSpec::polynomial(2, 1, 1), c, c), 9.0);
}

TEST(Kernel, AgreesWithDirectEvaluation) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (const auto& spec : {KernelSpec::linear(), KernelSpec::polynomial(3, 0.5, 1.0), KernelSpec::rbf(0.25)}) {
        for (int pair = 0; pair < 10; ++pair) {
            std::vector<double> x(4), y(4);
            Eigen::RowVectorXd ex(4), ey(4);
            for (int j = 0; j < 4; ++j) {
                ex(j) = x[static_cast<std::size_t>(j)] = g(rng);
                ey(j) = y[static_cast<std::size_t>(j)] = g(rng);
            }
            EXPECT_NEAR(kernel_value(spec, ex, ey), oracle::kernel(spec, x, y), 1e-12);
        }
    }
}

TEST(Gram, SymmetricWithUnitRbfDiagonal) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const auto ds = oracle::random_dataset(rng, 25, 3);
        for (const auto& spec : {KernelSpec::linear(), KernelSpec::polynomial(2), KernelSpec::rbf(0.5)}) {
            const auto g = gram(ds.features, spec);
            EXPECT_TRUE(g.values == g.values.transpose());
            if (spec.kind == KernelKind::rbf)
                for (Eigen::Index i = 0; i < g.size(); ++i) EXPECT_EQ(g.values(i, i), 1.0);
            const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.values).eigenvalues().minCoeff();
            EXPECT_GE(min_eig, -1e-8 * 25);
        }
    }
}

TEST(Gram, CrossKernelMatchesGram) {
    std::mt19937_64 rng(8);
    const auto ds = oracle::random_dataset(rng, 12, 3);
    const auto spec = KernelSpec::polynomial(3, 0.5, 1.0);
    const auto g = gram(ds.features, spec);
    EXPECT_LE((cross_kernel(ds.features, ds.features, spec) - g.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KernelSpec, ParseRoundTrip) {
    for (const auto& s : {KernelSpec::linear(), KernelSpec::polynomial(3, 0.25, 2.0), KernelSpec::rbf(0.125)})
        EXPECT_EQ(KernelSpec::parse(s.to_string()), s);
    EXPECT_EQ(KernelSpec::parse("poly:2"), KernelSpec::polynomial(2, 1.0, 1.0));
    EXPECT_THROW((void)KernelSpec::parse("sigmoid"), ConfigError);
    EXPECT_THROW((void)KernelSpec::parse("rbf:x"), ConfigError);
    EXPECT_THROW(KernelSpec::polynomial(0).validate(), DomainError);
}

TEST(Similarity, ClampsAndInterior) {
    GramMatrix g{Eigen::MatrixXd(2, 2), KernelSpec::rbf(1.0)};
    g.values << 1.0, 0.37, 0.37, 1.0;
    const auto s = similarity_from_gram(g, 1e-3);
    EXPECT_DOUBLE_EQ(s(0, 0), 1.0 - 1e-3);
    EXPECT_DOUBLE_EQ(s(0, 1), 0.37);

    Eigen::MatrixXd x(2, 2);
    x << 1, 0, -1, 0;
    const auto lin = similarity_from_gram(gram(x, KernelSpec::linear()), 1e-3);
    EXPECT_DOUBLE_EQ(lin(0, 1), 1e-3);
}

TEST(Similarity, InvalidDiagonal) {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 1, 1;
    EXPECT_THROW((void)similarity_from_gram(gram(x, KernelSpec::linear())), DomainError);
}

TEST(Similarity, RangeProperty) {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const auto ds = oracle::random_dataset(rng, 20, 3);
        for (const auto& spec : {KernelSpec::linear(), KernelSpec::polynomial(3), KernelSpec::rbf(2.0)}) {
            const auto s = similarity_from_gram(gram(ds.features, spec), 0.01);
            EXPECT_GE(s.w.minCoeff(), 0.01);
            EXPECT_LE(s.w.maxCoeff(), 0.99);
            EXPECT_TRUE(s.w == s.w.transpose());
        }
    }
}
