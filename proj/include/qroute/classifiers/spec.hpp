#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qroute/error.hpp"

namespace qroute {

enum class Family { logreg, svm_rbf, random_forest, knn, mlp };

inline constexpr std::array<Family, 5> kAllFamilies = {Family::logreg, Family::svm_rbf, Family::random_forest,
                                                       Family::knn, Family::mlp};

inline std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::logreg: return "logreg";
    case Family::svm_rbf: return "svm_rbf";
    case Family::random_forest: return "random_forest";
    case Family::knn: return "knn";
    case Family::mlp: return "mlp";
    }
    return "unknown";
}

inline std::string_view display_name(Family f) noexcept {
    switch (f) {
    case Family::logreg: return "Logistic Reg.";
    case Family::svm_rbf: return "SVM";
    case Family::random_forest: return "Random Forest";
    case Family::knn: return "KNN";
    case Family::mlp: return "MLP";
    }
    return "unknown";
}

inline Family parse_family(std::string_view s) {
    for (Family f : kAllFamilies)
        if (to_string(f) == s) return f;
    if (s == "svm") return Family::svm_rbf;
    if (s == "forest" || s == "rf") return Family::random_forest;
    if (s == "logistic") return Family::logreg;
    throw UsageError("unknown classifier \"" + std::string(s) +
                     "\" (expected logreg, svm_rbf, random_forest, knn or mlp)");
}

struct LogRegParams {
    double C = 1.0;
    std::size_t max_iterations = 1000;
    double gradient_tolerance = 1e-5;
};

struct SvmParams {
    double C = 1.0;
    std::optional<double> gamma;  // unset means "scale"
    double tolerance = 1e-3;
    std::size_t max_iterations = 1000000;
    std::size_t cache_megabytes = 256;
};

struct ForestParams {
    std::size_t n_trees = 200;
    std::size_t min_samples_split = 2;
};

struct KnnParams {
    std::size_t k = 7;
};

struct MlpParams {
    std::vector<std::size_t> hidden{256, 128};
    bool early_stopping = true;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    double validation_fraction = 0.1;
    std::size_t patience = 10;
};

// Classifier family plus hyperparameters. Defaults are the reference
// configuration; only the selected family's block is used.
struct ClassifierSpec {
    Family family = Family::svm_rbf;
    std::uint64_t seed = 0;
    LogRegParams logreg;
    SvmParams svm;
    ForestParams forest;
    KnnParams knn;
    MlpParams mlp;

    static ClassifierSpec defaults(Family f, std::uint64_t seed = 0) {
        ClassifierSpec s;
        s.family = f;
        s.seed = seed;
        return s;
    }

    void validate() const {
        auto positive = [](double v, const char* what) {
            if (!(v > 0.0)) throw UsageError(std::string(what) + " must be positive");
        };
        switch (family) {
        case Family::logreg:
            positive(logreg.C, "logreg C");
            positive(logreg.gradient_tolerance, "logreg gradient tolerance");
            if (logreg.max_iterations == 0) throw UsageError("logreg max_iterations must be >= 1");
            break;
        case Family::svm_rbf:
            positive(svm.C, "svm C");
            positive(svm.tolerance, "svm tolerance");
            if (svm.gamma) positive(*svm.gamma, "svm gamma");
            break;
        case Family::random_forest:
            if (forest.n_trees == 0) throw UsageError("random forest needs at least one tree");
            if (forest.min_samples_split < 2) throw UsageError("min_samples_split must be >= 2");
            break;
        case Family::knn:
            if (knn.k == 0) throw UsageError("knn k must be >= 1");
            break;
        case Family::mlp:
            for (auto h : mlp.hidden)
                if (h == 0) throw UsageError("mlp hidden layer sizes must be >= 1");
            positive(mlp.learning_rate, "mlp learning rate");
            if (mlp.batch_size == 0 || mlp.max_epochs == 0) throw UsageError("mlp batch size and epochs must be >= 1");
            if (mlp.validation_fraction < 0.0 || mlp.validation_fraction >= 1.0)
                throw UsageError("mlp validation fraction must be in [0, 1)");
            break;
        }
    }

    // Only the active family's parameters are written.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["family"] = std::string(to_string(family));
        j["seed"] = seed;
        switch (family) {
        case Family::logreg:
            j["C"] = logreg.C;
            j["max_iterations"] = logreg.max_iterations;
            j["gradient_tolerance"] = logreg.gradient_tolerance;
            break;
        case Family::svm_rbf:
            j["C"] = svm.C;
            j["gamma"] = svm.gamma ? nlohmann::json(*svm.gamma) : nlohmann::json("scale");
            j["tolerance"] = svm.tolerance;
            j["max_iterations"] = svm.max_iterations;
            break;
        case Family::random_forest:
            j["n_trees"] = forest.n_trees;
            j["min_samples_split"] = forest.min_samples_split;
            break;
        case Family::knn: j["k"] = knn.k; break;
        case Family::mlp:
            j["hidden"] = mlp.hidden;
            j["early_stopping"] = mlp.early_stopping;
            j["learning_rate"] = mlp.learning_rate;
            j["batch_size"] = mlp.batch_size;
            j["max_epochs"] = mlp.max_epochs;
            j["validation_fraction"] = mlp.validation_fraction;
            j["patience"] = mlp.patience;
            break;
        }
        return j;
    }

    static ClassifierSpec from_json(const nlohmann::json& j) {
        ClassifierSpec s = defaults(parse_family(j.at("family").get<std::string>()), j.at("seed").get<std::uint64_t>());
        switch (s.family) {
        case Family::logreg:
            s.logreg.C = j.at("C").get<double>();
            s.logreg.max_iterations = j.at("max_iterations").get<std::size_t>();
            s.logreg.gradient_tolerance = j.at("gradient_tolerance").get<double>();
            break;
        case Family::svm_rbf:
            s.svm.C = j.at("C").get<double>();
            if (j.at("gamma").is_number()) s.svm.gamma = j.at("gamma").get<double>();
            s.svm.tolerance = j.at("tolerance").get<double>();
            s.svm.max_iterations = j.at("max_iterations").get<std::size_t>();
            break;
        case Family::random_forest:
            s.forest.n_trees = j.at("n_trees").get<std::size_t>();
            s.forest.min_samples_split = j.at("min_samples_split").get<std::size_t>();
            break;
        case Family::knn: s.knn.k = j.at("k").get<std::size_t>(); break;
        case Family::mlp:
            s.mlp.hidden = j.at("hidden").get<std::vector<std::size_t>>();
            s.mlp.early_stopping = j.at("early_stopping").get<bool>();
            s.mlp.learning_rate = j.at("learning_rate").get<double>();
            s.mlp.batch_size = j.at("batch_size").get<std::size_t>();
            s.mlp.max_epochs = j.at("max_epochs").get<std::size_t>();
            s.mlp.validation_fraction = j.at("validation_fraction").get<double>();
            s.mlp.patience = j.at("patience").get<std::size_t>();
            break;
        }
        return s;
    }
};

} // namespace qroute
