#pragma once

// Fitted feature pipeline: the state needed to turn raw query text (or a
// precomputed embedding) into the matrix a model was trained on.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/embeddings.hpp"
#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/standardizer.hpp"
#include "qroute/structural.hpp"
#include "qroute/tfidf.hpp"

namespace qroute {

struct EmbedderInfo {
    bool fallback = false;  // false: vectors come from an external embedding file
    std::size_t dim = kDefaultEmbeddingDim;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"source", fallback ? "fallback_hash" : "external"}, {"dim", dim}, {"seed", seed}};
    }
    static EmbedderInfo from_json(const nlohmann::json& j) {
        const auto src = j.at("source").get<std::string>();
        if (src != "fallback_hash" && src != "external") throw DataError("unknown embedder source " + src);
        return {src == "fallback_hash", j.at("dim").get<std::size_t>(), j.at("seed").get<std::uint64_t>()};
    }
};

inline FeatureMatrix structural_matrix(std::span<const std::string> texts) {
    FeatureMatrix m = FeatureMatrix::dense(FeatureKind::structural, kStructuralDims);
    for (const auto& t : texts) {
        const auto f = extract_structural(t);
        m.add_dense_row(f);
    }
    return m;
}

inline FeatureMatrix fallback_embedding_matrix(std::span<const std::string> texts, const EmbedderInfo& e) {
    FeatureMatrix m = FeatureMatrix::dense(FeatureKind::embedding, e.dim);
    for (const auto& t : texts) m.add_dense_row(fallback_embed(t, e.dim, e.seed));
    return m;
}

struct FeaturePipeline {
    FeatureKind regime = FeatureKind::tfidf;
    std::optional<TfidfVocabulary> vocabulary;
    std::optional<Standardizer> standardizer;
    std::optional<EmbedderInfo> embedder;

    std::size_t output_dim() const {
        if (vocabulary) return vocabulary->size();
        if (standardizer) return standardizer->cols();
        return 0;
    }

    // False for embedding models whose vectors come from an external encoder.
    bool accepts_text() const { return regime != FeatureKind::embedding || (embedder && embedder->fallback); }

    // Unstandardized dense features for the structural and embedding regimes.
    FeatureMatrix raw_dense(std::span<const std::string> texts) const {
        switch (regime) {
        case FeatureKind::structural: return structural_matrix(texts);
        case FeatureKind::embedding:
            if (!accepts_text())
                throw UsageError("model uses external embeddings; supply precomputed vectors instead of text");
            return fallback_embedding_matrix(texts, *embedder);
        case FeatureKind::tfidf: break;
        }
        throw std::logic_error("raw_dense called for the tfidf regime");
    }

    FeatureMatrix transform_raw(const FeatureMatrix& raw) const {
        if (!standardizer) throw std::logic_error("pipeline has no standardizer");
        return apply_standardizer(*standardizer, raw);
    }

    FeatureMatrix transform_texts(std::span<const std::string> texts) const {
        if (regime == FeatureKind::tfidf) {
            if (!vocabulary) throw std::logic_error("pipeline has no vocabulary");
            return transform_tfidf(*vocabulary, texts);
        }
        return transform_raw(raw_dense(texts));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["regime"] = std::string(to_string(regime));
        if (vocabulary) j["vocabulary"] = vocabulary->to_json();
        if (standardizer) j["standardizer"] = standardizer->to_json();
        if (embedder) j["embedder"] = embedder->to_json();
        return j;
    }

    static FeaturePipeline from_json(const nlohmann::json& j) {
        FeaturePipeline p;
        p.regime = parse_feature_kind(j.at("regime").get<std::string>());
        if (j.contains("vocabulary")) p.vocabulary = TfidfVocabulary::from_json(j.at("vocabulary"));
        if (j.contains("standardizer")) p.standardizer = Standardizer::from_json(j.at("standardizer"));
        if (j.contains("embedder")) p.embedder = EmbedderInfo::from_json(j.at("embedder"));
        if (p.regime == FeatureKind::tfidf && !p.vocabulary) throw DataError("tfidf pipeline without vocabulary");
        if (p.regime != FeatureKind::tfidf && !p.standardizer) throw DataError("dense pipeline without standardizer");
        if (p.regime == FeatureKind::embedding && !p.embedder) throw DataError("embedding pipeline without embedder");
        return p;
    }
};

inline FeaturePipeline fit_tfidf_pipeline(std::span<const std::string> train_texts) {
    FeaturePipeline p;
    p.regime = FeatureKind::tfidf;
    p.vocabulary = fit_tfidf(train_texts);
    return p;
}

inline FeaturePipeline fit_dense_pipeline(FeatureKind regime, const FeatureMatrix& train_raw,
                                          std::optional<EmbedderInfo> embedder = std::nullopt) {
    FeaturePipeline p;
    p.regime = regime;
    p.standardizer = fit_standardizer(train_raw);
    if (regime == FeatureKind::embedding) p.embedder = embedder.value_or(EmbedderInfo{});
    return p;
}

} // namespace qroute
