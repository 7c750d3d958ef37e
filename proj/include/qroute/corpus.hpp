#pragma once

// Benchmark query records: ingestion, label statistics, stratified folds and
// a template-based synthetic generator for desk-scale runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "qroute/error.hpp"
#include "qroute/labels.hpp"
#include "qroute/random.hpp"

namespace qroute {

struct QueryRecord {
    std::string id;
    std::string text;
    std::string domain;
    Label label = Label::single_hop;

    bool operator==(const QueryRecord&) const = default;
};

using LabelCounts = std::array<std::size_t, kNumClasses>;

class Dataset {
public:
    Dataset() = default;

    // Validates ids (unique), text (non-blank) and computes tallies.
    explicit Dataset(std::vector<QueryRecord> records) : records_(std::move(records)) {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.id.empty()) throw DataError("record " + std::to_string(i) + ": empty id");
            if (!seen.insert(r.id).second) throw DataError("duplicate id \"" + r.id + "\"");
            if (r.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos)
                throw DataError("record \"" + r.id + "\": empty query text");
            ++label_counts_[index_of(r.label)];
            ++domain_counts_[r.domain];
        }
    }

    const std::vector<QueryRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const QueryRecord& operator[](std::size_t i) const { return records_[i]; }

    const LabelCounts& label_counts() const noexcept { return label_counts_; }
    std::size_t count(Label l) const noexcept { return label_counts_[index_of(l)]; }
    const std::map<std::string, std::size_t>& domain_counts() const noexcept { return domain_counts_; }

    std::vector<std::string> texts() const {
        std::vector<std::string> out;
        out.reserve(records_.size());
        for (const auto& r : records_) out.push_back(r.text);
        return out;
    }
    std::vector<Label> labels() const {
        std::vector<Label> out;
        out.reserve(records_.size());
        for (const auto& r : records_) out.push_back(r.label);
        return out;
    }

private:
    std::vector<QueryRecord> records_;
    LabelCounts label_counts_{};
    std::map<std::string, std::size_t> domain_counts_;
};

namespace detail {

inline std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw DataError("line " + std::to_string(line_no) + ": missing or non-string field \"" + key + "\"");
    return it->get<std::string>();
}

} // namespace detail

// One JSON object per line with string fields id, query, domain, label.
// Blank lines are skipped; line numbers in errors are 1-based.
inline Dataset parse_dataset(std::istream& in) {
    std::vector<QueryRecord> records;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
        }
        if (!obj.is_object()) throw DataError("line " + std::to_string(line_no) + ": record is not an object");
        QueryRecord r;
        r.id = detail::required_string(obj, "id", line_no);
        r.text = detail::required_string(obj, "query", line_no);
        r.domain = detail::required_string(obj, "domain", line_no);
        const std::string label = detail::required_string(obj, "label", line_no);
        auto parsed = try_parse_label(label);
        if (!parsed)
            throw DataError("line " + std::to_string(line_no) + ": unknown label \"" + label +
                            "\" (accepted values: single_hop, multi_hop, summary)");
        r.label = *parsed;
        if (r.id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty id");
        if (!ids.insert(r.id).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate id \"" + r.id + "\"");
        if (r.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos)
            throw DataError("line " + std::to_string(line_no) + ": empty query text");
        records.push_back(std::move(r));
    }
    return Dataset(std::move(records));
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path);
    return parse_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
    for (const auto& r : ds.records()) {
        nlohmann::ordered_json obj;
        obj["id"] = r.id;
        obj["query"] = r.text;
        obj["domain"] = r.domain;
        obj["label"] = std::string(to_string(r.label));
        out << obj.dump() << '\n';
    }
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file " + path);
    write_dataset(out, ds);
}

struct LabelDistribution {
    std::array<double, kNumClasses> proportion{};

    double operator[](Label l) const noexcept { return proportion[index_of(l)]; }
};

inline LabelDistribution label_distribution(const LabelCounts& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw DataError("label distribution of an empty dataset");
    LabelDistribution d;
    for (std::size_t i = 0; i < kNumClasses; ++i)
        d.proportion[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return d;
}

inline LabelDistribution label_distribution(const Dataset& ds) { return label_distribution(ds.label_counts()); }

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;

    std::vector<std::size_t> members(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> complement(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] != fold) out.push_back(i);
        return out;
    }
};

// Per label: seeded shuffle of that label's indices, then round-robin deal.
// The deal continues from the fold where the previous label stopped so fold
// totals stay balanced too. Labels with zero records are ignored.
inline FoldAssignment stratified_kfold(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw UsageError("stratified_kfold: k must be >= 2 (got " + std::to_string(k) + ")");
    std::array<std::vector<std::size_t>, kNumClasses> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[index_of(labels[i])].push_back(i);
    for (Label l : kAllLabels) {
        const auto n = by_label[index_of(l)].size();
        if (n > 0 && n < k)
            throw DataError("stratified_kfold: label " + std::string(to_string(l)) + " has " + std::to_string(n) +
                            " records, fewer than k=" + std::to_string(k));
    }
    FoldAssignment fa;
    fa.k = k;
    fa.fold_of.assign(labels.size(), 0);
    Rng rng(seed);
    std::size_t next_fold = 0;
    for (auto& members : by_label) {
        rng.shuffle(members);
        for (std::size_t idx : members) {
            fa.fold_of[idx] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    return fa;
}

inline FoldAssignment stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    const auto labels = ds.labels();
    return stratified_kfold(std::span<const Label>(labels), k, seed);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SyntheticOptions {
    LabelCounts n_per_label{100, 100, 100};
    std::vector<std::string> domains{"wiki", "literature", "legal", "medical"};
    std::uint64_t seed = 0;
    // Probability that a record's text is drawn from another label's template family.
    double noise_rate = 0.05;
};

namespace detail {

struct DomainLexicon {
    std::vector<std::string> entities;
    std::vector<std::string> attributes;
    std::vector<std::string> topics;
};

inline const DomainLexicon& lexicon_for(std::size_t domain_slot) {
    static const std::array<DomainLexicon, 4> lex = {{
        {{"the Eiffel Tower", "Napoleon Bonaparte", "the Nile river", "the Roman Empire", "Marie Curie",
          "the Great Wall", "Mount Everest", "the Treaty of Versailles", "Alexander Fleming", "the Berlin Wall",
          "Leonardo da Vinci", "the Amazon rainforest"},
         {"height", "population", "founding date", "capital", "official language", "birthplace"},
         {"european history", "world geography", "scientific discovery", "ancient civilizations"}},
        {{"Elizabeth Bennet", "Captain Ahab", "the narrator", "Jay Gatsby", "the old fisherman", "Jane Eyre",
          "the village council", "the young soldier", "Professor Hale", "the lighthouse keeper", "Anna Karenina",
          "the orphan girl"},
         {"motivation", "hometown", "occupation", "favourite place", "secret", "first appearance"},
         {"the novel", "the short story", "the plot", "the characters"}},
        {{"the tenancy agreement", "the arbitration clause", "the Supreme Court ruling", "the merger contract",
          "the privacy regulation", "the employment statute", "the patent filing", "the liability waiver",
          "the zoning ordinance", "the licensing agreement", "the data protection act", "the appeal decision"},
         {"effective date", "governing jurisdiction", "penalty amount", "filing deadline", "signing party",
          "termination notice"},
         {"contract law", "regulatory compliance", "case precedent", "corporate governance"}},
        {{"insulin resistance", "the hepatitis vaccine", "chronic kidney disease", "the beta blocker",
          "type 2 diabetes", "the inflammatory response", "statin therapy", "the immune system",
          "hypertension", "the antiviral drug", "the thyroid gland", "coronary artery disease"},
         {"recommended dosage", "primary symptom", "diagnostic test", "incidence rate", "mechanism of action",
          "approval year"},
         {"the clinical guideline", "patient care", "treatment outcomes", "disease management"}},
    }};
    return lex[domain_slot % lex.size()];
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(rng.below(v.size()))];
}

inline std::string two_distinct(Rng& rng, const std::vector<std::string>& v, std::string& second) {
    std::size_t a = static_cast<std::size_t>(rng.below(v.size()));
    std::size_t b = static_cast<std::size_t>(rng.below(v.size() - 1));
    if (b >= a) ++b;
    second = v[b];
    return v[a];
}

inline std::string capitalize_first(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

// Factual templates always start with a factual question word.
inline std::string factual_text(Rng& rng, const DomainLexicon& lx) {
    const auto& e = pick(rng, lx.entities);
    const auto& a = pick(rng, lx.attributes);
    switch (rng.below(6)) {
    case 0: return "Who is associated with " + e + "?";
    case 1: return "What is the " + a + " of " + e + "?";
    case 2: return "When was the " + a + " of " + e + " recorded?";
    case 3: return "Where is " + e + " first mentioned?";
    case 4: return "Which " + a + " is listed for " + e + "?";
    default: return "What " + a + " does " + e + " have?";
    }
}

inline std::string reasoning_text(Rng& rng, const DomainLexicon& lx) {
    std::string e2;
    const auto e1 = two_distinct(rng, lx.entities, e2);
    const auto& a = pick(rng, lx.attributes);
    switch (rng.below(6)) {
    case 0: return "How does " + e1 + " compare to " + e2 + " in terms of " + a + "?";
    case 1: return "Why did " + e1 + " lead to changes in " + e2 + ", given its " + a + "?";
    case 2: return "What connects " + e1 + " and " + e2 + ", and how did that affect the " + a + "?";
    case 3: return "Is the " + a + " of " + e1 + " greater than that of " + e2 + " because of their relationship?";
    case 4: return "After " + e1 + " changed, which consequence did it cause for " + e2 + "?";
    default: return capitalize_first(e1) + " and " + e2 + " differ in " + a + "; what explains the difference?";
    }
}

inline std::string summary_text(Rng& rng, const DomainLexicon& lx) {
    const auto& e = pick(rng, lx.entities);
    const auto& t = pick(rng, lx.topics);
    switch (rng.below(6)) {
    case 0: return "Summarize the main themes of " + t + ".";
    case 1: return "Give an overall overview of everything said about " + e + ".";
    case 2: return "Provide a summary of all the key points about " + t + ".";
    case 3: return "List the major ideas discussed across " + t + " overall.";
    case 4: return "What are the main takeaways about " + t + " across the whole collection?";
    default: return "Summarise the general discussion of " + e + " in " + t + ".";
    }
}

} // namespace detail

inline Dataset generate_synthetic(const SyntheticOptions& opt) {
    std::size_t total = 0;
    for (auto c : opt.n_per_label) total += c;
    if (total == 0) throw UsageError("generate_synthetic: all label counts are zero");
    if (opt.domains.empty()) throw UsageError("generate_synthetic: domain list is empty");
    if (opt.noise_rate < 0.0 || opt.noise_rate > 1.0) throw UsageError("generate_synthetic: noise rate outside [0,1]");

    Rng rng(opt.seed);
    std::vector<QueryRecord> records;
    records.reserve(total);
    std::size_t serial = 0;
    // Interleave labels so the file is not sorted by class.
    LabelCounts remaining = opt.n_per_label;
    while (records.size() < total) {
        for (Label l : kAllLabels) {
            auto& left = remaining[index_of(l)];
            if (left == 0) continue;
            --left;
            const std::size_t slot = serial % opt.domains.size();
            const auto& lx = detail::lexicon_for(slot);
            std::size_t family = index_of(l);
            if (opt.noise_rate > 0.0 && rng.bernoulli(opt.noise_rate))
                family = (family + 1 + static_cast<std::size_t>(rng.below(kNumClasses - 1))) % kNumClasses;
            std::string text;
            switch (label_at(family)) {
            case Label::single_hop: text = detail::factual_text(rng, lx); break;
            case Label::multi_hop: text = detail::reasoning_text(rng, lx); break;
            case Label::summary: text = detail::summary_text(rng, lx); break;
            }
            char id[32];
            std::snprintf(id, sizeof id, "syn-%06zu", serial);
            records.push_back({id, std::move(text), opt.domains[slot], l});
            ++serial;
        }
    }
    return Dataset(std::move(records));
}

} // namespace qroute
