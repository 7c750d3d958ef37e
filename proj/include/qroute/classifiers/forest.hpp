#pragma once

// Random forest of Gini-impurity decision trees: bootstrap samples,
// sqrt(d) candidate features per split, unlimited depth, majority vote.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/scores.hpp"
#include "qroute/classifiers/spec.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/labels.hpp"
#include "qroute/random.hpp"

namespace qroute {

using ClassCounts = std::array<std::uint32_t, kNumClasses>;

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    ClassCounts counts{};

    bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> x) const {
        std::size_t at = 0;
        while (!nodes[at].is_leaf()) {
            const auto& nd = nodes[at];
            at = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[at];
    }

    Label predict(std::span<const double> x) const { return label_at(argmax_first(leaf_for(x).counts)); }
};

namespace detail {

inline double gini(const ClassCounts& c, double n) {
    if (n <= 0.0) return 0.0;
    double s = 1.0;
    for (auto v : c) {
        const double p = static_cast<double>(v) / n;
        s -= p * p;
    }
    return s;
}

struct TreeBuilder {
    const FeatureMatrix& x;  // dense
    std::span<const Label> y;
    std::size_t max_features;
    std::size_t min_samples_split;
    Rng rng;

    std::vector<std::size_t> feature_order;
    std::vector<std::pair<double, std::size_t>> sorted;  // (value, label index)

    double value(std::size_t sample, std::size_t f) const { return x.row(sample).value[f]; }

    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double impurity = 0.0;
    };

    Split best_split(std::span<const std::size_t> samples, const ClassCounts& total) {
        Split best;
        const std::size_t d = x.cols();
        if (feature_order.size() != d) {
            feature_order.resize(d);
            for (std::size_t f = 0; f < d; ++f) feature_order[f] = f;
        }
        const double n = static_cast<double>(samples.size());
        std::size_t examined = 0;
        // Draw features without replacement until max_features non-constant ones were evaluated.
        for (std::size_t k = 0; k < d && examined < max_features; ++k) {
            const std::size_t pick = k + static_cast<std::size_t>(rng.below(d - k));
            std::swap(feature_order[k], feature_order[pick]);
            const std::size_t f = feature_order[k];

            const double first = value(samples[0], f);
            bool constant = true;
            for (std::size_t s : samples)
                if (value(s, f) != first) {
                    constant = false;
                    break;
                }
            if (constant) continue;
            ++examined;
            sorted.clear();
            for (std::size_t s : samples) sorted.emplace_back(value(s, f), index_of(y[s]));
            std::sort(sorted.begin(), sorted.end());

            ClassCounts left{};
            for (std::size_t p = 0; p + 1 < sorted.size(); ++p) {
                ++left[sorted[p].second];
                if (sorted[p].first == sorted[p + 1].first) continue;
                ClassCounts right;
                for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = total[c] - left[c];
                const double nl = static_cast<double>(p + 1), nr = n - nl;
                const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
                if (!best.found || imp < best.impurity) {
                    best.found = true;
                    best.feature = f;
                    best.impurity = imp;
                    const double lo = sorted[p].first, hi = sorted[p + 1].first;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best.threshold = mid;
                }
            }
        }
        return best;
    }

    DecisionTree build(std::vector<std::size_t> samples) {
        DecisionTree tree;
        struct Pending {
            std::size_t node;
            std::vector<std::size_t> samples;
        };
        std::vector<Pending> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(samples)});
        while (!stack.empty()) {
            Pending job = std::move(stack.back());
            stack.pop_back();
            ClassCounts counts{};
            for (std::size_t s : job.samples) ++counts[index_of(y[s])];
            tree.nodes[job.node].counts = counts;
            std::size_t nonzero = 0;
            for (auto c : counts) nonzero += c > 0;
            if (nonzero <= 1 || job.samples.size() < min_samples_split) continue;
            const Split split = best_split(job.samples, counts);
            if (!split.found) continue;
            std::vector<std::size_t> left, right;
            for (std::size_t s : job.samples) (value(s, split.feature) <= split.threshold ? left : right).push_back(s);
            const auto l = static_cast<std::uint32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& nd = tree.nodes[job.node];
            nd.feature = static_cast<std::int32_t>(split.feature);
            nd.threshold = split.threshold;
            nd.left = l;
            nd.right = l + 1;
            stack.push_back({l + 1, std::move(right)});
            stack.push_back({l, std::move(left)});
        }
        return tree;
    }
};

} // namespace detail

struct ForestModel {
    std::size_t dim = 0;
    std::vector<DecisionTree> trees;

    ScoreMatrix predict_scores(const FeatureMatrix& x) const {
        ScoreMatrix s{ScoreKind::vote_fraction, {}};
        s.rows.reserve(x.rows());
        std::vector<double> buf(dim);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            std::span<const double> row;
            if (x.is_sparse()) {
                std::fill(buf.begin(), buf.end(), 0.0);
                x.row(r).for_each_nonzero([&](std::size_t c, double v) { buf[c] = v; });
                row = buf;
            } else {
                row = x.row(r).value;
            }
            ClassScores votes{};
            for (const auto& t : trees) votes[index_of(t.predict(row))] += 1.0;
            for (double& v : votes) v /= static_cast<double>(trees.size());
            s.rows.push_back(votes);
        }
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& t : trees) {
            std::vector<std::int32_t> feature;
            std::vector<double> threshold;
            std::vector<std::uint32_t> left, right;
            std::vector<ClassCounts> counts;
            for (const auto& nd : t.nodes) {
                feature.push_back(nd.feature);
                threshold.push_back(nd.threshold);
                left.push_back(nd.left);
                right.push_back(nd.right);
                counts.push_back(nd.counts);
            }
            jt.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                          {"counts", counts}});
        }
        return {{"dim", dim}, {"trees", jt}};
    }

    static ForestModel from_json(const nlohmann::json& j) {
        ForestModel m;
        m.dim = j.at("dim").get<std::size_t>();
        for (const auto& jt : j.at("trees")) {
            const auto feature = jt.at("feature").get<std::vector<std::int32_t>>();
            const auto threshold = jt.at("threshold").get<std::vector<double>>();
            const auto left = jt.at("left").get<std::vector<std::uint32_t>>();
            const auto right = jt.at("right").get<std::vector<std::uint32_t>>();
            const auto counts = jt.at("counts").get<std::vector<ClassCounts>>();
            const std::size_t n = feature.size();
            if (threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n || n == 0)
                throw DataError("inconsistent tree in model file");
            DecisionTree t;
            for (std::size_t i = 0; i < n; ++i) {
                if (feature[i] >= 0 && (static_cast<std::size_t>(feature[i]) >= m.dim || left[i] >= n || right[i] >= n))
                    throw DataError("tree node out of range in model file");
                t.nodes.push_back({feature[i], threshold[i], left[i], right[i], counts[i]});
            }
            m.trees.push_back(std::move(t));
        }
        return m;
    }
};

inline std::size_t forest_max_features(std::size_t d) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
}

inline ForestModel fit_forest(const FeatureMatrix& x_in, std::span<const Label> y, const ForestParams& p,
                              std::uint64_t seed) {
    const FeatureMatrix x = x_in.to_dense();
    const std::size_t n = x.rows();
    ForestModel m;
    m.dim = x.cols();
    m.trees.reserve(p.n_trees);
    for (std::size_t t = 0; t < p.n_trees; ++t) {
        detail::TreeBuilder builder{x, y, forest_max_features(x.cols()), p.min_samples_split,
                                    Rng(derive_seed(seed, t)), {}, {}};
        std::vector<std::size_t> boot(n);
        for (auto& b : boot) b = static_cast<std::size_t>(builder.rng.below(n));
        m.trees.push_back(builder.build(std::move(boot)));
    }
    return m;
}

} // namespace qroute
