#pragma once

// Run configuration: one JSON document whose keys are dotted paths
// ("cost.ratios.NaiveRAG", "svm.C", ...). Nested objects are flattened into
// the same dotted form, so {"cost": {"baseline": "GraphRAG"}} also works.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/spec.hpp"
#include "qroute/corpus.hpp"
#include "qroute/cost.hpp"
#include "qroute/embeddings.hpp"
#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"

namespace qroute {

struct RunConfig {
    std::optional<std::string> data;
    std::optional<std::string> out;
    std::optional<std::string> embeddings;
    std::optional<std::string> model;
    std::optional<std::uint64_t> seed;
    FeatureKind regime = FeatureKind::tfidf;
    ClassifierSpec spec;  // family + hyperparameters
    std::size_t k = 5;
    bool fallback_embedder = false;
    std::size_t fallback_dim = kDefaultEmbeddingDim;
    std::size_t threads = 0;  // 0: hardware concurrency

    CostTable table;
    RoutingPolicy policy;
    std::string baseline = kIterativeRag;

    std::string bind = "127.0.0.1:8080";
    std::size_t batch_cap = 256;

    SyntheticOptions synth{{300, 300, 300}, {"wiki", "literature", "legal", "medical"}, 0, 0.05};

    std::uint64_t seed_or_default() const { return seed.value_or(0); }

    void validate() const {
        spec.validate();
        table.validate();
        policy.validate(table);
        (void)table.cost(baseline);
        if (k < 2) throw UsageError("k must be >= 2");
    }
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, nlohmann::json>>& out) {
    if (j.is_object() && !(prefix.size() > 0 && j.empty())) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else {
        out.emplace_back(prefix, j);
    }
}

template <typename T>
T as(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw UsageError("config key \"" + key + "\" has the wrong type (" + v.dump() + ")");
    }
}

inline bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

} // namespace detail

// Applies one dotted key. Unknown keys are a usage error.
inline void apply_setting(RunConfig& c, const std::string& key, const nlohmann::json& v) {
    using detail::as;
    if (key == "data") c.data = as<std::string>(v, key);
    else if (key == "out") c.out = as<std::string>(v, key);
    else if (key == "embeddings") c.embeddings = as<std::string>(v, key);
    else if (key == "model") c.model = as<std::string>(v, key);
    else if (key == "seed") c.seed = as<std::uint64_t>(v, key);
    else if (key == "regime") c.regime = parse_feature_kind(as<std::string>(v, key));
    else if (key == "classifier") c.spec.family = parse_family(as<std::string>(v, key));
    else if (key == "k") c.k = as<std::size_t>(v, key);
    else if (key == "fallback_embedder") c.fallback_embedder = as<bool>(v, key);
    else if (key == "fallback_dim") c.fallback_dim = as<std::size_t>(v, key);
    else if (key == "threads") c.threads = as<std::size_t>(v, key);
    else if (key == "bind") c.bind = as<std::string>(v, key);
    else if (key == "batch_cap") c.batch_cap = as<std::size_t>(v, key);
    else if (key == "logreg.C") c.spec.logreg.C = as<double>(v, key);
    else if (key == "logreg.max_iterations") c.spec.logreg.max_iterations = as<std::size_t>(v, key);
    else if (key == "svm.C") c.spec.svm.C = as<double>(v, key);
    else if (key == "svm.gamma") {
        if (v.is_string() && v.get<std::string>() == "scale") c.spec.svm.gamma.reset();
        else c.spec.svm.gamma = as<double>(v, key);
    } else if (key == "svm.tolerance") c.spec.svm.tolerance = as<double>(v, key);
    else if (key == "forest.n_trees") c.spec.forest.n_trees = as<std::size_t>(v, key);
    else if (key == "knn.k") c.spec.knn.k = as<std::size_t>(v, key);
    else if (key == "mlp.hidden") c.spec.mlp.hidden = as<std::vector<std::size_t>>(v, key);
    else if (key == "mlp.max_epochs") c.spec.mlp.max_epochs = as<std::size_t>(v, key);
    else if (key == "mlp.patience") c.spec.mlp.patience = as<std::size_t>(v, key);
    else if (key == "mlp.learning_rate") c.spec.mlp.learning_rate = as<double>(v, key);
    else if (key == "mlp.batch_size") c.spec.mlp.batch_size = as<std::size_t>(v, key);
    else if (key == "mlp.early_stopping") c.spec.mlp.early_stopping = as<bool>(v, key);
    else if (detail::starts_with(key, "cost.ratios.")) c.table.ratios[key.substr(12)] = as<double>(v, key);
    else if (detail::starts_with(key, "cost.policy.")) {
        const auto label = try_parse_label(key.substr(12));
        if (!label) throw UsageError("config key \"" + key + "\" names an unknown label");
        c.policy.paradigm[index_of(*label)] = as<std::string>(v, key);
    } else if (key == "cost.baseline") c.baseline = as<std::string>(v, key);
    else if (key == "synth.per_label") {
        const auto n = as<std::size_t>(v, key);
        c.synth.n_per_label = {n, n, n};
    } else if (detail::starts_with(key, "synth.count.")) {
        const auto label = try_parse_label(key.substr(12));
        if (!label) throw UsageError("config key \"" + key + "\" names an unknown label");
        c.synth.n_per_label[index_of(*label)] = as<std::size_t>(v, key);
    } else if (key == "synth.noise") c.synth.noise_rate = as<double>(v, key);
    else if (key == "synth.domains") c.synth.domains = as<std::vector<std::string>>(v, key);
    else throw UsageError("unknown config key \"" + key + "\"");
}

inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("config file must contain a JSON object");
    std::vector<std::pair<std::string, nlohmann::json>> flat;
    detail::flatten(j, "", flat);
    for (const auto& [k, v] : flat) apply_setting(c, k, v);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    }
    RunConfig c;
    apply_config_json(c, j);
    return c;
}

} // namespace qroute
