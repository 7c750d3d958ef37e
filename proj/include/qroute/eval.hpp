#pragma once

// Stratified k-fold cross-validation with pooled out-of-fold predictions.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/model.hpp"
#include "qroute/corpus.hpp"
#include "qroute/embeddings.hpp"
#include "qroute/metrics.hpp"
#include "qroute/parallel.hpp"
#include "qroute/pipeline.hpp"

namespace qroute {

struct PooledPrediction {
    std::string id;
    std::string domain;
    Label truth = Label::single_hop;
    Label predicted = Label::single_hop;
    std::size_t fold = 0;
};

struct EvalReport {
    FeatureKind regime = FeatureKind::tfidf;
    ClassifierSpec spec;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassMetrics, kNumClasses> per_class{};
    ConfusionMatrix confusion;
    std::map<std::string, double> per_domain;
    std::vector<PooledPrediction> predictions;  // dataset order
    std::size_t argmax_mismatches = 0;          // rows where predict != argmax(predict_scores)

    std::vector<Label> predicted_labels() const {
        std::vector<Label> out;
        for (const auto& p : predictions) out.push_back(p.predicted);
        return out;
    }
    std::vector<Label> true_labels() const {
        std::vector<Label> out;
        for (const auto& p : predictions) out.push_back(p.truth);
        return out;
    }
};

// Macro-F1 restricted to each domain's pooled predictions.
inline std::map<std::string, double> per_domain_breakdown(std::span<const PooledPrediction> preds) {
    std::map<std::string, ConfusionMatrix> by_domain;
    for (const auto& p : preds) by_domain[p.domain].add(p.truth, p.predicted);
    std::map<std::string, double> out;
    for (const auto& [d, cm] : by_domain) out[d] = macro_f1(cm);
    return out;
}

inline std::map<std::string, double> per_domain_breakdown(const EvalReport& r) {
    return per_domain_breakdown(r.predictions);
}

inline void finalize_metrics(EvalReport& r) {
    std::vector<Label> t = r.true_labels(), p = r.predicted_labels();
    r.confusion = confusion(t, p);
    r.accuracy = accuracy(r.confusion);
    r.macro_f1 = macro_f1(r.confusion);
    for (Label l : kAllLabels) r.per_class[index_of(l)] = class_metrics(r.confusion, l);
    r.per_domain = per_domain_breakdown(r);
}

struct CrossValidationOptions {
    FeatureKind regime = FeatureKind::tfidf;
    ClassifierSpec spec;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::optional<std::string> embeddings_path;
    std::optional<EmbedderInfo> fallback_embedder;  // used when no embeddings_path
    std::size_t threads = default_thread_count();
};

// What each fold saw; lets callers assert there is no train/test leakage.
struct FoldTrace {
    std::size_t fold = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<std::string> pipeline_fit_ids;
};

using FoldObserver = std::function<void(const FoldTrace&)>;

namespace detail {

inline std::vector<std::string> gather_ids(const Dataset& ds, std::span<const std::size_t> idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(ds[i].id);
    return out;
}

} // namespace detail

inline EvalReport cross_validate(const Dataset& ds, const CrossValidationOptions& opt,
                                 const FoldObserver& observer = {}) {
    if (opt.regime == FeatureKind::embedding && !opt.embeddings_path && !opt.fallback_embedder)
        throw UsageError("embedding regime needs an embeddings file (or the fallback embedder)");
    if (opt.regime != FeatureKind::embedding && opt.embeddings_path)
        throw UsageError("an embeddings file is only meaningful for the embedding regime");
    opt.spec.validate();

    const FoldAssignment folds = stratified_kfold(ds, opt.k, opt.seed);
    const auto texts = ds.texts();
    const auto labels = ds.labels();

    // Row-wise (stateless) raw features for the dense regimes.
    std::optional<FeatureMatrix> raw;
    std::optional<EmbedderInfo> embedder;
    if (opt.regime == FeatureKind::structural) {
        raw = structural_matrix(texts);
    } else if (opt.regime == FeatureKind::embedding) {
        if (opt.embeddings_path) {
            raw = load_embeddings(*opt.embeddings_path, ds);
            embedder = EmbedderInfo{false, raw->cols(), 0};
        } else {
            embedder = *opt.fallback_embedder;
            raw = fallback_embedding_matrix(texts, *embedder);
        }
    }
    if (raw) {
        std::vector<std::string> ids;
        for (const auto& r : ds.records()) ids.push_back(r.id);
        raw->set_ids(std::move(ids));
    }

    std::vector<std::vector<Label>> fold_pred(opt.k);
    std::vector<std::size_t> fold_mismatch(opt.k, 0);
    std::vector<FoldTrace> traces(opt.k);
    parallel_for(
        opt.k,
        [&](std::size_t f) {
            const auto train_idx = folds.complement(f);
            const auto test_idx = folds.members(f);
            std::vector<Label> y_train;
            for (std::size_t i : train_idx) y_train.push_back(labels[i]);

            FeatureMatrix x_train, x_test;
            std::vector<std::string> fit_ids;
            if (opt.regime == FeatureKind::tfidf) {
                std::vector<std::string> tr, te;
                for (std::size_t i : train_idx) {
                    tr.push_back(texts[i]);
                    fit_ids.push_back(ds[i].id);
                }
                for (std::size_t i : test_idx) te.push_back(texts[i]);
                const auto pipe = fit_tfidf_pipeline(tr);
                x_train = pipe.transform_texts(tr);
                x_test = pipe.transform_texts(te);
            } else {
                const FeatureMatrix raw_train = raw->select_rows(train_idx);
                const auto pipe = fit_dense_pipeline(opt.regime, raw_train, embedder);
                fit_ids = raw_train.ids();
                x_train = pipe.transform_raw(raw_train);
                x_test = pipe.transform_raw(raw->select_rows(test_idx));
            }

            const TrainedModel model = train(opt.spec, x_train, y_train);
            const ScoreMatrix scores = predict_scores(model, x_test);
            fold_pred[f] = predict(model, x_test);
            const auto am = scores.argmax();
            for (std::size_t r = 0; r < am.size(); ++r) fold_mismatch[f] += am[r] != fold_pred[f][r];

            if (observer) {
                traces[f].fold = f;
                traces[f].train_ids = detail::gather_ids(ds, train_idx);
                traces[f].test_ids = detail::gather_ids(ds, test_idx);
                traces[f].pipeline_fit_ids = std::move(fit_ids);
            }
        },
        opt.threads);
    if (observer)
        for (const auto& t : traces) observer(t);

    EvalReport rep;
    rep.regime = opt.regime;
    rep.spec = opt.spec;
    rep.k = opt.k;
    rep.seed = opt.seed;
    rep.predictions.resize(ds.size());
    std::vector<std::size_t> cursor(opt.k, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t f = folds.fold_of[i];
        rep.predictions[i] = {ds[i].id, ds[i].domain, ds[i].label, fold_pred[f][cursor[f]++], f};
    }
    for (auto m : fold_mismatch) rep.argmax_mismatches += m;
    finalize_metrics(rep);
    return rep;
}

// Fits the feature pipeline and classifier on every row; the pipeline is
// embedded in the returned model so it can route raw text later.
inline TrainedModel train_full(const Dataset& ds, FeatureKind regime, const ClassifierSpec& spec,
                               const std::optional<std::string>& embeddings_path = std::nullopt,
                               const std::optional<EmbedderInfo>& fallback_embedder = std::nullopt) {
    if (regime == FeatureKind::embedding && !embeddings_path && !fallback_embedder)
        throw UsageError("embedding regime needs an embeddings file (or the fallback embedder)");
    spec.validate();
    const auto texts = ds.texts();
    const auto labels = ds.labels();
    FeaturePipeline pipe;
    FeatureMatrix x;
    if (regime == FeatureKind::tfidf) {
        pipe = fit_tfidf_pipeline(texts);
        x = pipe.transform_texts(texts);
    } else {
        FeatureMatrix raw;
        std::optional<EmbedderInfo> embedder;
        if (regime == FeatureKind::structural) {
            raw = structural_matrix(texts);
        } else if (embeddings_path) {
            raw = load_embeddings(*embeddings_path, ds);
            embedder = EmbedderInfo{false, raw.cols(), 0};
        } else {
            embedder = *fallback_embedder;
            raw = fallback_embedding_matrix(texts, *embedder);
        }
        pipe = fit_dense_pipeline(regime, raw, embedder);
        x = pipe.transform_raw(raw);
    }
    TrainedModel m = train(spec, x, labels);
    m.pipeline = std::move(pipe);
    return m;
}

} // namespace qroute
