#pragma once

// Hand-crafted structural query features (23 dimensions).

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qroute {

inline constexpr std::size_t kStructuralDims = 23;

enum StructuralDim : std::size_t {
    kWordCount = 0,
    kCharCount,
    kMeanWordLength,
    kWhoFlag,
    kWhatFlag,
    kWhenFlag,
    kWhereFlag,
    kWhyFlag,
    kHowFlag,
    kWhichFlag,
    kNegation,
    kEntityCount,
    kClauseCount,
    kComparative,
    kTemporal,
    kAggregation,
    kCausal,
    kProcedural,
    kQuestionMark,
    kHasDigit,
    kCommaCount,
    kCoordinatingCount,
    kTypeTokenRatio,
};

inline constexpr std::array<std::string_view, kStructuralDims> kStructuralNames = {
    "word_count",    "char_count",  "mean_word_length", "qw_who",       "qw_what",
    "qw_when",       "qw_where",    "qw_why",           "qw_how",       "qw_which",
    "negation",      "entity_count", "clause_count",    "comparative",  "temporal",
    "aggregation",   "causal",      "procedural",       "question_mark", "has_digit",
    "comma_count",   "coordinating_conjunctions",       "type_token_ratio",
};

using StructuralFeatureVector = std::array<double, kStructuralDims>;

namespace detail {

using WordSet = std::unordered_set<std::string_view>;

inline const WordSet& question_words() {
    static const WordSet s{"who", "what", "when", "where", "why", "how", "which"};
    return s;
}
inline const WordSet& negation_words() {
    static const WordSet s{"not", "no", "never", "none", "cannot"};
    return s;
}
// Subordinating conjunctions and relative pronouns; each non-initial
// occurrence opens another clause.
inline const WordSet& clause_markers() {
    static const WordSet s{"that",   "which",  "who",    "whom",     "whose", "where",  "when",
                           "while",  "because", "although", "though", "if",   "unless", "since",
                           "whereas", "until",  "after",  "before",   "whether"};
    return s;
}
inline const WordSet& comparative_words() {
    static const WordSet s{"more",      "less",       "than",      "compare", "compared", "comparing",
                           "comparison", "versus",    "vs",        "differ",  "differs",  "difference",
                           "differences", "similar",  "similarity", "better", "worse",    "greater",
                           "fewer",     "between"};
    return s;
}
inline const WordSet& temporal_words() {
    static const WordSet s{"when", "before", "after", "during", "year",  "years",  "date",
                           "dates", "century", "decade", "since", "until", "period", "timeline"};
    return s;
}
inline const WordSet& aggregation_words() {
    static const WordSet s{"summarize", "summarise", "summary", "summarizing", "overall", "all",
                           "total",     "list",      "overview", "themes",     "main",    "across",
                           "entire",    "whole",     "general"};
    return s;
}
inline const WordSet& causal_words() {
    static const WordSet s{"why",     "because", "cause",  "causes", "caused", "causing", "lead",
                           "leads",   "led",     "result", "results", "effect", "effects", "due",
                           "reason",  "reasons", "therefore", "consequence", "consequences"};
    return s;
}
inline const WordSet& procedural_words() {
    static const WordSet s{"how", "steps", "step", "process", "procedure", "procedures", "method", "methods",
                           "instructions"};
    return s;
}
inline const WordSet& coordinating_conjunctions() {
    static const WordSet s{"and", "but", "or", "nor", "yet", "so"};
    return s;
}

struct Word {
    std::string raw;    // punctuation-stripped, original case
    std::string lower;
    bool sentence_initial = false;
};

inline bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

// Whitespace-separated chunks with leading/trailing punctuation removed.
inline std::vector<Word> split_words(std::string_view text) {
    std::vector<Word> words;
    bool next_initial = true;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t b = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view chunk = text.substr(b, i - b);
        if (chunk.empty()) continue;
        const bool ends_sentence = chunk.back() == '.' || chunk.back() == '!' || chunk.back() == '?';
        std::size_t s = 0, e = chunk.size();
        while (s < e && !is_word_char(static_cast<unsigned char>(chunk[s]))) ++s;
        while (e > s && !is_word_char(static_cast<unsigned char>(chunk[e - 1]))) --e;
        while (s < e && chunk[s] == '\'') ++s;
        while (e > s && chunk[e - 1] == '\'') --e;
        if (s < e) {
            Word w;
            w.raw = std::string(chunk.substr(s, e - s));
            w.lower = w.raw;
            for (char& c : w.lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            w.sentence_initial = next_initial;
            words.push_back(std::move(w));
            next_initial = false;
        }
        if (ends_sentence) next_initial = true;
    }
    return words;
}

inline std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

} // namespace detail

inline StructuralFeatureVector extract_structural(std::string_view text) {
    StructuralFeatureVector f{};
    const auto words = detail::split_words(text);
    if (words.empty() && text.empty()) return f;

    f[kWordCount] = static_cast<double>(words.size());
    f[kCharCount] = static_cast<double>(detail::utf8_length(text));
    std::size_t letters = 0;
    for (const auto& w : words) letters += detail::utf8_length(w.raw);
    f[kMeanWordLength] = words.empty() ? 0.0 : static_cast<double>(letters) / static_cast<double>(words.size());

    // Question word: first occurrence of any of the seven.
    static constexpr std::array<std::string_view, 7> qw = {"who", "what", "when", "where", "why", "how", "which"};
    for (const auto& w : words) {
        bool hit = false;
        for (std::size_t q = 0; q < qw.size(); ++q) {
            if (w.lower == qw[q]) {
                f[kWhoFlag + q] = 1.0;
                hit = true;
                break;
            }
        }
        if (hit) break;
    }

    std::unordered_set<std::string> distinct;
    std::size_t clauses = words.empty() ? 0 : 1;
    auto flag = [&](StructuralDim d, const detail::WordSet& set, const std::string& w) {
        if (set.count(w)) f[d] = 1.0;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto& w = words[i];
        distinct.insert(w.lower);
        if (detail::negation_words().count(w.lower) ||
            (w.lower.size() >= 3 && w.lower.compare(w.lower.size() - 3, 3, "n't") == 0))
            f[kNegation] = 1.0;
        if (!w.sentence_initial && w.raw != "I" && std::isupper(static_cast<unsigned char>(w.raw[0])))
            f[kEntityCount] += 1.0;
        if (i > 0 && detail::clause_markers().count(w.lower)) ++clauses;
        flag(kComparative, detail::comparative_words(), w.lower);
        flag(kTemporal, detail::temporal_words(), w.lower);
        flag(kAggregation, detail::aggregation_words(), w.lower);
        flag(kCausal, detail::causal_words(), w.lower);
        flag(kProcedural, detail::procedural_words(), w.lower);
        if (detail::coordinating_conjunctions().count(w.lower)) f[kCoordinatingCount] += 1.0;
    }
    f[kClauseCount] = static_cast<double>(clauses);
    f[kTypeTokenRatio] =
        words.empty() ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(words.size());

    for (unsigned char c : text) {
        if (c == '?') f[kQuestionMark] = 1.0;
        if (c >= '0' && c <= '9') f[kHasDigit] = 1.0;
        if (c == ',') f[kCommaCount] += 1.0;
    }
    return f;
}

} // namespace qroute
