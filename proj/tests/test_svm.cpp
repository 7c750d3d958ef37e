#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qroute/classifiers/model.hpp"
#include "qroute/corpus.hpp"
#include "qroute/pipeline.hpp"

using namespace qroute;

namespace {

struct Instance {
    oracle::Matrix x, K;
    std::vector<double> y;
};

Instance random_instance(std::uint64_t seed, std::size_t n = 10, double gamma = 0.5) {
    Rng rng(seed);
    Instance in;
    for (std::size_t i = 0; i < n; ++i) {
        in.x.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        in.y.push_back(i < n / 2 ? 1.0 : -1.0);
    }
    rng.shuffle(in.y);
    in.K.assign(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) in.K[i][j] = oracle::rbf(in.x[i], in.x[j], gamma);
    return in;
}

DenseKernel to_kernel(const oracle::Matrix& K) {
    std::vector<double> flat;
    for (const auto& row : K) flat.insert(flat.end(), row.begin(), row.end());
    return DenseKernel(flat, K.size());
}

FeatureMatrix dense(const oracle::Matrix& rows) {
    auto m = FeatureMatrix::dense(FeatureKind::structural, rows.front().size());
    for (const auto& r : rows) m.add_dense_row(r);
    return m;
}

} // namespace

TEST(RbfKernel, Examples) {
    const std::vector<double> a{0, 0}, b{1, 1};
    EXPECT_NEAR(rbf_kernel(a, b, 0.5), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(rbf_kernel(a, b, 0.5), 0.367879, 1e-6);
    EXPECT_EQ(rbf_kernel(b, b, 3.0), 1.0);
    EXPECT_THROW(rbf_kernel(a, std::vector<double>{1, 2, 3}, 1.0), DataError);
    EXPECT_THROW(rbf_kernel(a, b, 0.0), UsageError);
}

TEST(RbfKernel, Symmetric) {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(5), b(5);
        for (auto& v : a) v = rng.uniform(-3, 3);
        for (auto& v : b) v = rng.uniform(-3, 3);
        const double g = rng.uniform(0.01, 2);
        EXPECT_EQ(rbf_kernel(a, b, g), rbf_kernel(b, a, g));
    }
}

TEST(GammaScale, MatchesDefinition) {
    const auto x = dense({{1, 2}, {3, 4}});
    // entries 1..4: mean 2.5, population variance 1.25 -> gamma = 1 / (2 * 1.25)
    EXPECT_DOUBLE_EQ(gamma_scale(x), 0.4);
    EXPECT_DOUBLE_EQ(gamma_scale(dense({{7, 7, 7}})), 1.0 / 3.0);
}

TEST(Smo, TwoPointAnalytic) {
    // Linear kernel on x = +1, -1.
    DenseKernel k({1, -1, -1, 1}, 2);
    const std::vector<double> y{1, -1};
    const auto s = solve_binary_svm(k, y, 1000.0, 1e-3);
    ASSERT_TRUE(s.converged);
    EXPECT_NEAR(s.alpha[0], 0.5, 1e-6);
    EXPECT_NEAR(s.alpha[1], 0.5, 1e-6);
    EXPECT_NEAR(s.intercept, 0.0, 1e-6);
}

TEST(Smo, MatchesProjectedGradientOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto in = random_instance(seed);
        auto k = to_kernel(in.K);
        const auto s = solve_binary_svm(k, in.y, 1.0, 1e-3);
        const auto ref = oracle::svm_dual_pg(in.K, in.y, 1.0);
        const double smo_obj = oracle::dual_objective(in.K, in.y, s.alpha);
        const double ref_obj = oracle::dual_objective(in.K, in.y, ref);
        EXPECT_NEAR(smo_obj, ref_obj, 1e-4) << "seed " << seed;
        EXPECT_NEAR(s.objective, smo_obj, 1e-9);
        EXPECT_LT(oracle::kkt_gap(in.K, in.y, ref, 1.0), 1e-6) << "oracle did not converge";
    }
}

TEST(Smo, FeasibleAndKkt) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto in = random_instance(seed, 25, 1.0);
        for (double C : {0.1, 1.0, 10.0}) {
            auto k = to_kernel(in.K);
            const auto s = solve_binary_svm(k, in.y, C, 1e-3);
            ASSERT_TRUE(s.converged);
            double ay = 0;
            for (std::size_t i = 0; i < s.alpha.size(); ++i) {
                EXPECT_GE(s.alpha[i], 0.0);
                EXPECT_LE(s.alpha[i], C);
                ay += s.alpha[i] * in.y[i];
            }
            EXPECT_LT(std::abs(ay), 1e-3);
            EXPECT_LT(oracle::kkt_gap(in.K, in.y, s.alpha, C), 1e-3);
        }
    }
}

TEST(Smo, IterationCapReportsNonConvergence) {
    const auto in = random_instance(5, 30, 1.0);
    auto k = to_kernel(in.K);
    const auto s = solve_binary_svm(k, in.y, 10.0, 1e-9, 3);
    EXPECT_FALSE(s.converged);
    EXPECT_EQ(s.iterations, 3u);
    EXPECT_GT(s.violation, 1e-9);
}

TEST(SvmModel, XorSeparatedByRbf) {
    const auto x = dense({{1, 1}, {-1, -1}, {1, -1}, {-1, 1}});
    const std::vector<Label> y{Label::single_hop, Label::single_hop, Label::multi_hop, Label::multi_hop};
    SvmParams p;
    OvrTrace trace;
    const auto m = fit_svm(x, y, p, &trace);
    const auto s = m.predict_scores(x);
    EXPECT_EQ(s.kind, ScoreKind::margin);
    EXPECT_EQ(s.argmax(), y);
    // By symmetry all four duals are equal; brute-force the one-dimensional dual.
    oracle::Matrix K(4, std::vector<double>(4));
    const oracle::Matrix pts{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) K[i][j] = oracle::rbf(pts[i], pts[j], trace.gamma);
    double best_a = 0, best_obj = -1e300;
    for (int step = 0; step <= 100000; ++step) {
        const double a = step / 100000.0;
        const double obj = oracle::dual_objective(K, trace.y[0], std::vector<double>(4, a));
        if (obj > best_obj) best_obj = obj, best_a = a;
    }
    for (double a : trace.solutions[0].alpha) EXPECT_NEAR(a, best_a, 2e-3);
    // summary never occurs in training, so its margin is the constant -1.
    for (const auto& row : s.rows) EXPECT_EQ(row[2], -1.0);
}

TEST(SvmModel, OvrProblemsSatisfyKkt) {
    SyntheticOptions o;
    o.n_per_label = {40, 40, 40};
    o.seed = 4;
    const auto ds = generate_synthetic(o);
    const auto raw = structural_matrix(ds.texts());
    const auto x = apply_standardizer(fit_standardizer(raw), raw);
    const auto y = ds.labels();
    SvmParams p;
    OvrTrace trace;
    fit_svm(x, y, p, &trace);
    oracle::Matrix K(x.rows(), std::vector<double>(x.rows()));
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.rows(); ++j) {
            std::vector<double> a(x.row(i).value.begin(), x.row(i).value.end());
            std::vector<double> b(x.row(j).value.begin(), x.row(j).value.end());
            K[i][j] = oracle::rbf(a, b, trace.gamma);
        }
    for (std::size_t c = 0; c < 3; ++c) {
        const auto& s = trace.solutions[c];
        ASSERT_TRUE(s.converged);
        double ay = 0;
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
            EXPECT_GE(s.alpha[i], 0.0);
            EXPECT_LE(s.alpha[i], p.C);
            ay += s.alpha[i] * trace.y[c][i];
        }
        EXPECT_LT(std::abs(ay), p.tolerance);
        EXPECT_LT(oracle::kkt_gap(K, trace.y[c], s.alpha, p.C), p.tolerance);
    }
}

TEST(SvmModel, SparseAndDenseAgree) {
    SyntheticOptions o;
    o.n_per_label = {30, 30, 30};
    o.seed = 8;
    const auto ds = generate_synthetic(o);
    const auto texts = ds.texts();
    const auto xs = transform_tfidf(fit_tfidf(texts), texts);
    const auto xd = xs.to_dense();
    const auto y = ds.labels();
    const auto a = fit_svm(xs, y, SvmParams{}).predict_scores(xs);
    const auto b = fit_svm(xd, y, SvmParams{}).predict_scores(xd);
    for (std::size_t r = 0; r < a.rows.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a.rows[r][c], b.rows[r][c], 1e-9);
}
