#pragma once

// Unigram + bigram TF-IDF with sublinear term frequency, a document-frequency
// floor of 2 and a 3000-term vocabulary cap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"

namespace qroute {

inline constexpr std::size_t kMaxVocabulary = 3000;
inline constexpr std::size_t kMinDocumentFrequency = 2;

inline bool is_token_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Lowercased alphanumeric runs of length >= 2. Non-ASCII bytes count as word
// characters so accented names stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

// Unigrams in order, then bigrams ("a b") in order.
inline std::vector<std::string> ngram_terms(const std::vector<std::string>& tokens) {
    std::vector<std::string> terms(tokens);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) terms.push_back(tokens[i] + ' ' + tokens[i + 1]);
    return terms;
}

struct TfidfVocabulary {
    std::vector<std::string> terms;  // column order, lexicographic
    std::vector<std::size_t> document_frequency;
    std::vector<double> idf;
    std::size_t n_documents = 0;
    std::unordered_map<std::string, std::uint32_t> column;

    std::size_t size() const noexcept { return terms.size(); }

    std::optional<std::uint32_t> find(const std::string& term) const {
        auto it = column.find(term);
        if (it == column.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_index() {
        column.clear();
        for (std::size_t i = 0; i < terms.size(); ++i) column.emplace(terms[i], static_cast<std::uint32_t>(i));
    }

    nlohmann::json to_json() const {
        return {{"terms", terms}, {"document_frequency", document_frequency}, {"idf", idf},
                {"n_documents", n_documents}};
    }

    static TfidfVocabulary from_json(const nlohmann::json& j) {
        TfidfVocabulary v;
        v.terms = j.at("terms").get<std::vector<std::string>>();
        v.document_frequency = j.at("document_frequency").get<std::vector<std::size_t>>();
        v.idf = j.at("idf").get<std::vector<double>>();
        v.n_documents = j.at("n_documents").get<std::size_t>();
        if (v.idf.size() != v.terms.size() || v.document_frequency.size() != v.terms.size())
            throw DataError("inconsistent TF-IDF vocabulary");
        v.rebuild_index();
        return v;
    }
};

inline double smoothed_idf(std::size_t n_docs, std::size_t df) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

inline TfidfVocabulary fit_tfidf(std::span<const std::string> texts, std::size_t max_terms = kMaxVocabulary,
                                 std::size_t min_df = kMinDocumentFrequency) {
    if (texts.size() < 2) throw DataError("fit_tfidf needs at least 2 documents");
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& text : texts) {
        auto terms = ngram_terms(tokenize(text));
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
        for (auto& t : terms) ++df[std::move(t)];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [term, count] : df)
        if (count >= min_df) kept.emplace_back(term, count);
    if (kept.empty()) throw DataError("fit_tfidf: vocabulary is empty after document-frequency filtering");
    if (kept.size() > max_terms) {
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        kept.resize(max_terms);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    TfidfVocabulary v;
    v.n_documents = texts.size();
    for (auto& [term, count] : kept) {
        v.terms.push_back(term);
        v.document_frequency.push_back(count);
        v.idf.push_back(smoothed_idf(texts.size(), count));
    }
    v.rebuild_index();
    return v;
}

// One L2-normalized sparse row per text; out-of-vocabulary terms are ignored.
inline FeatureMatrix transform_tfidf(const TfidfVocabulary& vocab, std::span<const std::string> texts) {
    FeatureMatrix m = FeatureMatrix::sparse(FeatureKind::tfidf, vocab.size());
    std::map<std::uint32_t, std::size_t> tf;
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    for (const auto& text : texts) {
        tf.clear();
        for (const auto& term : ngram_terms(tokenize(text)))
            if (auto col = vocab.find(term)) ++tf[*col];
        idx.clear();
        val.clear();
        double norm2 = 0.0;
        for (auto [col, count] : tf) {
            const double w = (1.0 + std::log(static_cast<double>(count))) * vocab.idf[col];
            idx.push_back(col);
            val.push_back(w);
            norm2 += w * w;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& w : val) w *= inv;
        }
        m.add_sparse_row(idx, val);
    }
    return m;
}

} // namespace qroute
