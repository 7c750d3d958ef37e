#pragma once

// Inference path shared by the `route` command and the HTTP service:
// text (or a precomputed embedding) -> label, paradigm, cost ratio, scores.

#include <array>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "qroute/classifiers/model.hpp"
#include "qroute/cost.hpp"
#include "qroute/error.hpp"

namespace qroute {

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

struct RouteResponse {
    Label label = Label::single_hop;
    std::string paradigm;
    double cost_ratio = 0.0;
    ClassScores scores{};
    ScoreKind score_kind = ScoreKind::probability;
    std::string model_id;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json s;
        for (Label l : kAllLabels) s[std::string(to_string(l))] = scores[index_of(l)];
        return {{"label", std::string(to_string(label))},
                {"paradigm", paradigm},
                {"cost_ratio", cost_ratio},
                {"scores", s},
                {"score_kind", std::string(to_string(score_kind))},
                {"model_id", model_id}};
    }

    bool operator==(const RouteResponse&) const = default;
};

class Router {
public:
    Router(TrainedModel model, std::string model_id, CostTable table = {}, RoutingPolicy policy = {})
        : model_(std::move(model)), model_id_(std::move(model_id)), table_(std::move(table)),
          policy_(std::move(policy)) {
        if (!model_.pipeline)
            throw DataError("model file has no feature pipeline; train it with the train-full command");
        table_.validate();
        policy_.validate(table_);
    }

    static Router from_file(const std::string& path, CostTable table = {}, RoutingPolicy policy = {}) {
        const std::string bytes = read_file(path);
        return Router(deserialize_model(bytes), sha256_hex(bytes), std::move(table), std::move(policy));
    }

    const TrainedModel& model() const noexcept { return model_; }
    const std::string& model_id() const noexcept { return model_id_; }
    bool accepts_text() const { return model_.pipeline->accepts_text(); }
    bool accepts_vectors() const { return model_.pipeline->regime == FeatureKind::embedding; }

    std::vector<RouteResponse> route_texts(std::span<const std::string> queries) const {
        for (const auto& q : queries)
            if (q.find_first_not_of(" \t\r\n\f\v") == std::string::npos) throw UsageError("empty query text");
        if (!accepts_text())
            throw UsageError("this model was trained on external embeddings; send precomputed vectors");
        return respond(predict_scores(model_, model_.pipeline->transform_texts(queries)));
    }

    // Raw (unstandardized) embedding vectors, for embedding-regime models.
    std::vector<RouteResponse> route_vectors(const std::vector<std::vector<double>>& vectors) const {
        if (!accepts_vectors()) throw UsageError("vector input is only accepted by embedding-regime models");
        const std::size_t dim = model_.pipeline->standardizer->cols();
        FeatureMatrix raw = FeatureMatrix::dense(FeatureKind::embedding, dim);
        for (const auto& v : vectors) {
            if (v.size() != dim)
                throw UsageError("vector has " + std::to_string(v.size()) + " values, model expects " +
                                 std::to_string(dim));
            for (double x : v)
                if (!std::isfinite(x)) throw UsageError("vector contains a non-finite value");
            raw.add_dense_row(v);
        }
        return respond(predict_scores(model_, model_.pipeline->transform_raw(raw)));
    }

    RouteResponse route(const std::string& query) const { return route_texts(std::span(&query, 1)).front(); }

private:
    std::vector<RouteResponse> respond(const ScoreMatrix& s) const {
        std::vector<RouteResponse> out;
        out.reserve(s.rows.size());
        for (const auto& row : s.rows) {
            RouteResponse r;
            r.label = label_at(argmax_first(row));
            r.paradigm = policy_.map_label(r.label);
            r.cost_ratio = table_.cost(r.paradigm);
            r.scores = row;
            r.score_kind = s.kind;
            r.model_id = model_id_;
            out.push_back(std::move(r));
        }
        return out;
    }

    TrainedModel model_;
    std::string model_id_;
    CostTable table_;
    RoutingPolicy policy_;
};

} // namespace qroute
