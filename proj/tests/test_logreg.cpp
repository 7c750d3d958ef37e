#include <gtest/gtest.h>

#include <cmath>

#include "qroute/classifiers/logreg.hpp"
#include "qroute/random.hpp"

using namespace qroute;

namespace {

struct Toy {
    FeatureMatrix x = FeatureMatrix::dense(FeatureKind::structural, 2);
    std::vector<Label> y;
    std::vector<std::array<double, 2>> pts;
};

// Two clusters either side of the line x0 = 0, gap of 2 between them.
Toy two_clusters(std::uint64_t seed) {
    Toy t;
    Rng rng(seed);
    for (int i = 0; i < 20; ++i) {
        const bool pos = i % 2 == 0;
        const std::array<double, 2> p{pos ? 1.0 + rng.uniform(0, 2) : -1.0 - rng.uniform(0, 2), rng.uniform(-3, 3)};
        t.pts.push_back(p);
        t.x.add_dense_row(p);
        t.y.push_back(pos ? Label::multi_hop : Label::summary);
    }
    return t;
}

// Brute-force search for a separating line over a grid of directions and offsets.
bool linearly_separable(const Toy& t) {
    for (int a = 0; a < 360; ++a) {
        const double th = a * M_PI / 180.0;
        for (double b = -5; b <= 5; b += 0.05) {
            bool ok = true;
            for (std::size_t i = 0; i < t.pts.size() && ok; ++i) {
                const double s = std::cos(th) * t.pts[i][0] + std::sin(th) * t.pts[i][1] - b;
                ok = (t.y[i] == Label::multi_hop) ? s > 0 : s < 0;
            }
            if (ok) return true;
        }
    }
    return false;
}

} // namespace

TEST(LogReg, SeparableClustersFitPerfectly) {
    const auto t = two_clusters(3);
    ASSERT_TRUE(linearly_separable(t));
    const auto m = fit_logreg(t.x, t.y, LogRegParams{});
    const auto s = m.predict_scores(t.x);
    EXPECT_EQ(s.argmax(), t.y);
    for (const auto& row : s.rows) EXPECT_NEAR(row[0] + row[1] + row[2], 1.0, 1e-12);
}

TEST(LogReg, LossDecreasesMonotonically) {
    Rng rng(4);
    auto x = FeatureMatrix::dense(FeatureKind::structural, 5);
    std::vector<Label> y;
    for (int i = 0; i < 90; ++i) {
        std::vector<double> r(5);
        for (auto& v : r) v = rng.uniform(-1, 1);
        const auto l = label_at(rng.below(3));
        r[index_of(l)] += 0.8;
        x.add_dense_row(r);
        y.push_back(l);
    }
    std::vector<double> trace;
    const auto m = fit_logreg(x, y, LogRegParams{}, &trace);
    ASSERT_GT(trace.size(), 2u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LT(trace[i], trace[i - 1]);
    EXPECT_TRUE(m.converged || m.iterations == LogRegParams{}.max_iterations);
    if (m.converged) {
        EXPECT_LE(m.final_gradient_norm, 1e-5);
    }
    EXPECT_DOUBLE_EQ(m.final_loss, trace.back());
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
    Rng rng(5);
    auto x = FeatureMatrix::dense(FeatureKind::structural, 3);
    std::vector<Label> y;
    for (int i = 0; i < 12; ++i) {
        x.add_dense_row(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        y.push_back(label_at(i % 3));
    }
    detail::LogRegProblem prob{x, y, 0.7};
    LogRegModel m = LogRegModel::zeros(3);
    for (auto& w : m.weights) w = rng.uniform(-1, 1);
    for (auto& b : m.intercept) b = rng.uniform(-1, 1);
    std::vector<double> g;
    prob.evaluate(m, &g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < m.weights.size() + 3; ++i) {
        auto param = [&](LogRegModel& mm) -> double& {
            return i < mm.weights.size() ? mm.weights[i] : mm.intercept[i - mm.weights.size()];
        };
        LogRegModel p = m, q = m;
        param(p) += h;
        param(q) -= h;
        const double fd = (prob.evaluate(p, nullptr) - prob.evaluate(q, nullptr)) / (2 * h);
        EXPECT_NEAR(g[i], fd, 1e-7) << i;
    }
}

TEST(LogReg, ZeroModelGivesUniformScores) {
    auto x = FeatureMatrix::dense(FeatureKind::structural, 4);
    x.add_dense_row(std::vector<double>{1, 2, 3, 4});
    x.add_dense_row(std::vector<double>{-1, 0, 5, 2});
    const auto s = LogRegModel::zeros(4).predict_scores(x);
    for (const auto& row : s.rows)
        for (double p : row) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
    for (Label l : s.argmax()) EXPECT_EQ(l, Label::single_hop);
}

TEST(LogReg, SparseInputMatchesDense) {
    Rng rng(6);
    auto xs = FeatureMatrix::sparse(FeatureKind::tfidf, 6);
    std::vector<Label> y;
    for (int i = 0; i < 30; ++i) {
        std::vector<std::uint32_t> idx;
        std::vector<double> val;
        for (std::uint32_t c = 0; c < 6; ++c)
            if (rng.bernoulli(0.4)) {
                idx.push_back(c);
                val.push_back(rng.uniform(0.1, 1));
            }
        xs.add_sparse_row(idx, val);
        y.push_back(label_at(i % 3));
    }
    const auto a = fit_logreg(xs, y, LogRegParams{});
    const auto b = fit_logreg(xs.to_dense(), y, LogRegParams{});
    ASSERT_EQ(a.weights.size(), b.weights.size());
    for (std::size_t i = 0; i < a.weights.size(); ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-9);
}
