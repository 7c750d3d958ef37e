#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qroute/classifiers/mlp.hpp"

using namespace qroute;

namespace {

std::vector<oracle::Layer> to_oracle(const MlpModel& m) {
    std::vector<oracle::Layer> net;
    for (const auto& l : m.layers) net.push_back({l.in, l.out, l.weights, l.bias});
    return net;
}

std::vector<double> flatten(const MlpGradient& g) {
    std::vector<double> out;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        out.insert(out.end(), g.weights[l].begin(), g.weights[l].end());
        out.insert(out.end(), g.bias[l].begin(), g.bias[l].end());
    }
    return out;
}

struct Batch {
    oracle::Matrix rows;
    FeatureMatrix x = FeatureMatrix::dense(FeatureKind::embedding, 4);
    std::vector<Label> y;
    std::vector<int> yi;
};

Batch random_batch(std::uint64_t seed, std::size_t n) {
    Batch b;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(4);
        for (auto& v : r) v = rng.uniform(-1, 1);
        b.rows.push_back(r);
        b.x.add_dense_row(r);
        b.yi.push_back(static_cast<int>(rng.below(3)));
        b.y.push_back(label_at(static_cast<std::size_t>(b.yi.back())));
    }
    return b;
}

// Smallest |pre-activation| of any hidden unit over the batch; finite
// differences are only meaningful away from the ReLU kink.
double min_hidden_margin(const MlpModel& m, const oracle::Matrix& rows) {
    double best = 1e300;
    for (const auto& r : rows) {
        const auto& L = m.layers[0];
        for (std::size_t j = 0; j < L.out; ++j) {
            double z = L.bias[j];
            for (std::size_t i = 0; i < L.in; ++i) z += r[i] * L.weights[i * L.out + j];
            best = std::min(best, std::abs(z));
        }
    }
    return best;
}

} // namespace

TEST(MlpGradient, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = MlpModel::glorot(4, {3}, seed);
        Rng rng(seed + 100);
        for (auto& l : m.layers)
            for (auto& b : l.bias) b = rng.uniform(-0.5, 0.5);
        const auto batch = random_batch(seed, 6);
        if (min_hidden_margin(m, batch.rows) < 1e-3) continue;
        const auto analytic = flatten(mlp_gradient(m, batch.x, batch.y));
        const auto numeric = oracle::mlp_numeric_gradient(to_oracle(m), batch.rows, batch.yi, 1e-5);
        ASSERT_EQ(analytic.size(), numeric.size());
        ASSERT_EQ(analytic.size(), 4u * 3 + 3 + 3 * 3 + 3);
        double worst = 0;
        for (std::size_t i = 0; i < analytic.size(); ++i)
            worst = std::max(worst, oracle::relative_error(analytic[i], numeric[i]));
        EXPECT_LE(worst, 1e-4) << "seed " << seed;
    }
}

TEST(MlpGradient, LossMatchesOracle) {
    const auto m = MlpModel::glorot(4, {3}, 1);
    const auto b = random_batch(2, 8);
    const auto g = mlp_gradient(m, b.x, b.y);
    EXPECT_NEAR(g.loss, oracle::mlp_loss(to_oracle(m), b.rows, b.yi), 1e-12);
}

TEST(MlpGradient, ZeroInputZeroWeights) {
    const auto m = MlpModel::zeros(4, {3});
    auto x = FeatureMatrix::dense(FeatureKind::embedding, 4);
    const std::vector<Label> y{Label::single_hop, Label::summary, Label::summary};
    for (int i = 0; i < 3; ++i) x.add_dense_row(std::vector<double>(4, 0.0));
    std::vector<std::vector<double>> act;
    m.forward(x.row(0), act);
    for (double h : act[0]) EXPECT_EQ(h, 0.0);
    const auto g = mlp_gradient(m, x, y);
    // Output bias gradient = mean over rows of softmax(0) - onehot.
    EXPECT_NEAR(g.bias[1][0], 1.0 / 3.0 - 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(g.bias[1][1], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(g.bias[1][2], 1.0 / 3.0 - 2.0 / 3.0, 1e-15);
    for (double w : g.weights[0]) EXPECT_EQ(w, 0.0);
    for (double w : g.weights[1]) EXPECT_EQ(w, 0.0);
    EXPECT_NEAR(g.loss, std::log(3.0), 1e-15);
}

TEST(MlpGradient, DuplicatedBatchKeepsMean) {
    const auto m = MlpModel::glorot(4, {3}, 3);
    const auto b = random_batch(4, 5);
    Batch twice = b;
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
        twice.x.add_dense_row(b.rows[i]);
        twice.y.push_back(b.y[i]);
    }
    const auto g1 = flatten(mlp_gradient(m, b.x, b.y));
    const auto g2 = flatten(mlp_gradient(m, twice.x, twice.y));
    for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-14);
}

TEST(MlpGradient, SparseInputMatchesDense) {
    const auto m = MlpModel::glorot(4, {5, 3}, 9);
    auto xs = FeatureMatrix::sparse(FeatureKind::tfidf, 4);
    auto xd = FeatureMatrix::dense(FeatureKind::tfidf, 4);
    const std::vector<Label> y{Label::multi_hop, Label::single_hop};
    const std::vector<std::uint32_t> i0{1, 3}, i1{0};
    const std::vector<double> v0{0.5, -2.0}, v1{1.5};
    xs.add_sparse_row(i0, v0);
    xs.add_sparse_row(i1, v1);
    xd.add_dense_row(std::vector<double>{0, 0.5, 0, -2.0});
    xd.add_dense_row(std::vector<double>{1.5, 0, 0, 0});
    EXPECT_EQ(flatten(mlp_gradient(m, xs, y)), flatten(mlp_gradient(m, xd, y)));
}

TEST(Mlp, ZeroModelPredictsFirstClass) {
    const auto m = MlpModel::zeros(4, {256, 128});
    const auto b = random_batch(5, 10);
    const auto s = m.predict_scores(b.x);
    for (const auto& row : s.rows)
        for (double p : row) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
    for (Label l : s.argmax()) EXPECT_EQ(l, Label::single_hop);
}

TEST(Mlp, LearnsSeparableDataAndStopsEarly) {
    Rng rng(6);
    auto x = FeatureMatrix::dense(FeatureKind::embedding, 4);
    std::vector<Label> y;
    for (int i = 0; i < 150; ++i) {
        const auto l = label_at(static_cast<std::size_t>(i % 3));
        std::vector<double> r(4);
        for (auto& v : r) v = rng.uniform(-0.5, 0.5);
        r[index_of(l)] += 2.0;
        x.add_dense_row(r);
        y.push_back(l);
    }
    MlpParams p;
    p.hidden = {16, 8};
    const auto m = fit_mlp(x, y, p, 11);
    EXPECT_EQ(m.predict_scores(x).argmax(), y);
    EXPECT_LE(m.epochs_run, m.best_epoch + p.patience + 1);
    EXPECT_EQ(m.validation_loss.size(), m.epochs_run);
    const double best = *std::min_element(m.validation_loss.begin(), m.validation_loss.end());
    EXPECT_EQ(m.validation_loss[m.best_epoch], best);
    EXPECT_EQ(MlpModel::from_json(m.to_json()).to_json(), m.to_json());
}

TEST(Mlp, HoldoutIsStratified) {
    std::vector<Label> y;
    for (int i = 0; i < 50; ++i) y.push_back(Label::single_hop);
    for (int i = 0; i < 20; ++i) y.push_back(Label::multi_hop);
    y.push_back(Label::summary);
    Rng rng(1);
    std::vector<std::size_t> train, val;
    detail::stratified_holdout(y, 0.1, rng, train, val);
    std::array<int, 3> vc{};
    for (auto i : val) ++vc[index_of(y[i])];
    EXPECT_EQ(vc, (std::array<int, 3>{5, 2, 0}));
    EXPECT_EQ(train.size() + val.size(), y.size());
}
