#pragma once

// One train/predict contract over the five classifier families, plus the
// model file format.

#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/forest.hpp"
#include "qroute/classifiers/knn.hpp"
#include "qroute/classifiers/logreg.hpp"
#include "qroute/classifiers/mlp.hpp"
#include "qroute/classifiers/scores.hpp"
#include "qroute/classifiers/spec.hpp"
#include "qroute/classifiers/svm.hpp"
#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/pipeline.hpp"

namespace qroute {

inline constexpr int kModelFormat = 1;

using ModelParams = std::variant<LogRegModel, SvmModel, ForestModel, KnnModel, MlpModel>;

struct TrainedModel {
    ClassifierSpec spec;
    std::size_t dim = 0;
    ModelParams params;
    std::optional<FeaturePipeline> pipeline;  // attached by full-dataset training
};

namespace detail {

inline void check_features(const FeatureMatrix& x, std::size_t expected_dim) {
    if (x.cols() != expected_dim)
        throw DataError("feature dimension mismatch: model expects " + std::to_string(expected_dim) +
                        " columns, input has " + std::to_string(x.cols()));
}

} // namespace detail

inline TrainedModel train(const ClassifierSpec& spec, const FeatureMatrix& x, std::span<const Label> y) {
    spec.validate();
    if (x.rows() != y.size())
        throw DataError("train: " + std::to_string(x.rows()) + " feature rows but " + std::to_string(y.size()) +
                        " labels");
    if (y.size() < 2) throw DataError("train: need at least 2 training rows");
    bool seen[kNumClasses] = {};
    std::size_t distinct = 0;
    for (Label l : y)
        if (!seen[index_of(l)]) {
            seen[index_of(l)] = true;
            ++distinct;
        }
    if (distinct < 2) throw DataError("train: training labels contain a single class");
    if (!x.all_finite()) throw DataError("train: non-finite feature values");

    TrainedModel m{spec, x.cols(), LogRegModel{}, std::nullopt};
    switch (spec.family) {
    case Family::logreg: m.params = fit_logreg(x, y, spec.logreg); break;
    case Family::svm_rbf: m.params = fit_svm(x, y, spec.svm); break;
    case Family::random_forest: m.params = fit_forest(x, y, spec.forest, spec.seed); break;
    case Family::knn: m.params = fit_knn(x, y, spec.knn.k); break;
    case Family::mlp: m.params = fit_mlp(x, y, spec.mlp, spec.seed); break;
    }
    return m;
}

inline ScoreMatrix predict_scores(const TrainedModel& m, const FeatureMatrix& x) {
    detail::check_features(x, m.dim);
    return std::visit([&](const auto& p) { return p.predict_scores(x); }, m.params);
}

// Argmax of predict_scores with the class-order tie-break.
inline std::vector<Label> predict(const TrainedModel& m, const FeatureMatrix& x) {
    return predict_scores(m, x).argmax();
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["model_format"] = kModelFormat;
    j["spec"] = m.spec.to_json();
    j["classes"] = {"single_hop", "multi_hop", "summary"};
    j["feature_dim"] = m.dim;
    if (m.pipeline) j["pipeline"] = m.pipeline->to_json();
    j["params"] = std::visit([](const auto& p) { return p.to_json(); }, m.params);
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("model_format")) throw DataError("not a model file (missing model_format)");
    if (j.at("model_format").get<int>() != kModelFormat)
        throw DataError("unsupported model_format " + j.at("model_format").dump());
    if (j.at("classes") != nlohmann::json{"single_hop", "multi_hop", "summary"})
        throw DataError("model file has an unexpected class order");
    TrainedModel m;
    m.spec = ClassifierSpec::from_json(j.at("spec"));
    m.dim = j.at("feature_dim").get<std::size_t>();
    if (j.contains("pipeline")) {
        m.pipeline = FeaturePipeline::from_json(j.at("pipeline"));
        if (m.pipeline->output_dim() != m.dim) throw DataError("pipeline output dimension does not match model");
    }
    const auto& p = j.at("params");
    switch (m.spec.family) {
    case Family::logreg: m.params = LogRegModel::from_json(p); break;
    case Family::svm_rbf: m.params = SvmModel::from_json(p); break;
    case Family::random_forest: m.params = ForestModel::from_json(p); break;
    case Family::knn: m.params = KnnModel::from_json(p); break;
    case Family::mlp: m.params = MlpModel::from_json(p); break;
    }
    return m;
}

inline std::string serialize_model(const TrainedModel& m) { return model_to_json(m).dump() + "\n"; }

inline TrainedModel deserialize_model(std::string_view text) {
    try {
        return model_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const std::string& path, const TrainedModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file " + path);
    out << serialize_model(m);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

} // namespace qroute
