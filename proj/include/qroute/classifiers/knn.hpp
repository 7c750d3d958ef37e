#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/scores.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/labels.hpp"

namespace qroute {

// Brute-force k-nearest neighbours under cosine distance (1 - cos).
// Zero-norm rows sit at +inf distance from everything. Distance ties are
// broken by lower training index; vote ties by class order.
struct KnnModel {
    std::size_t k = 7;
    FeatureMatrix train;
    std::vector<Label> labels;
    std::vector<double> norms;

    void compute_norms() {
        norms.clear();
        for (std::size_t r = 0; r < train.rows(); ++r) norms.push_back(std::sqrt(train.row(r).squared_norm()));
    }

    std::size_t dim() const { return train.cols(); }

    // Indices of the k nearest training rows, nearest first.
    std::vector<std::size_t> neighbours(const RowView& q) const {
        const double qn = std::sqrt(q.squared_norm());
        std::vector<std::pair<double, std::size_t>> dist(train.rows());
        for (std::size_t i = 0; i < train.rows(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            if (qn > 0.0 && norms[i] > 0.0) d = 1.0 - dot(q, train.row(i)) / (qn * norms[i]);
            dist[i] = {d, i};
        }
        const std::size_t kk = std::min(k, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        std::vector<std::size_t> out;
        out.reserve(kk);
        for (std::size_t i = 0; i < kk; ++i) out.push_back(dist[i].second);
        return out;
    }

    ScoreMatrix predict_scores(const FeatureMatrix& x) const {
        ScoreMatrix s{ScoreKind::vote_fraction, {}};
        s.rows.reserve(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const auto nb = neighbours(x.row(r));
            ClassScores votes{};
            for (std::size_t i : nb) votes[index_of(labels[i])] += 1.0;
            for (double& v : votes) v /= static_cast<double>(nb.size());
            s.rows.push_back(votes);
        }
        return s;
    }

    nlohmann::json to_json() const {
        std::vector<std::string> names;
        for (Label l : labels) names.emplace_back(to_string(l));
        return {{"k", k}, {"train", train.to_json()}, {"labels", names}};
    }

    static KnnModel from_json(const nlohmann::json& j) {
        KnnModel m;
        m.k = j.at("k").get<std::size_t>();
        m.train = FeatureMatrix::from_json(j.at("train"));
        for (const auto& s : j.at("labels")) m.labels.push_back(parse_label(s.get<std::string>()));
        if (m.labels.size() != m.train.rows()) throw DataError("knn label count mismatch");
        m.compute_norms();
        return m;
    }
};

inline KnnModel fit_knn(const FeatureMatrix& x, std::span<const Label> y, std::size_t k) {
    KnnModel m;
    m.k = k;
    m.train = x;
    m.train.set_ids(std::vector<std::string>(x.rows()));
    m.labels.assign(y.begin(), y.end());
    m.compute_norms();
    return m;
}

} // namespace qroute
