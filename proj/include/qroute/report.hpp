#pragma once

// Report serialization: structured JSON, the flat per-query CSV, and the
// aligned text tables (classifier x regime grid, savings vs macro-F1,
// regime x domain).

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/cost.hpp"
#include "qroute/eval.hpp"

namespace qroute {

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string regime_title(FeatureKind k) {
    switch (k) {
    case FeatureKind::tfidf: return "TF-IDF";
    case FeatureKind::embedding: return "Embedding";
    case FeatureKind::structural: return "Structural";
    }
    return "?";
}

inline std::string short_family(Family f) {
    switch (f) {
    case Family::logreg: return "LogReg";
    case Family::svm_rbf: return "SVM";
    case Family::random_forest: return "RF";
    case Family::knn: return "KNN";
    case Family::mlp: return "MLP";
    }
    return "?";
}

inline std::vector<PolicyRow> policy_report(const EvalReport& r, const CostTable& table = {},
                                            const RoutingPolicy& policy = {},
                                            const std::string& baseline = kIterativeRag) {
    return policy_report(regime_title(r.regime) + " + " + short_family(r.spec.family), r.true_labels(),
                         r.predicted_labels(), table, policy, baseline);
}

inline nlohmann::ordered_json policy_rows_json(const std::vector<PolicyRow>& rows) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& row : rows)
        out.push_back({{"configuration", row.configuration},
                       {"savings_percent", row.savings_percent},
                       {"macro_f1", row.macro_f1}});
    return out;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r, const CostTable& table = {},
                                             const RoutingPolicy& policy = {},
                                             const std::string& baseline = kIterativeRag) {
    nlohmann::ordered_json j;
    j["regime"] = std::string(to_string(r.regime));
    j["classifier"] = nlohmann::ordered_json::parse(r.spec.to_json().dump());
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["n"] = r.predictions.size();
    j["accuracy"] = r.accuracy;
    j["macro_f1"] = r.macro_f1;
    nlohmann::ordered_json pc;
    for (Label l : kAllLabels) {
        const auto& m = r.per_class[index_of(l)];
        pc[std::string(to_string(l))] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    j["per_class"] = pc;
    j["confusion"] = r.confusion.counts;
    nlohmann::ordered_json dom = nlohmann::ordered_json::object();
    for (const auto& [d, f] : r.per_domain) dom[d] = f;
    j["per_domain_macro_f1"] = dom;
    j["argmax_mismatches"] = r.argmax_mismatches;
    const auto sim = simulate_savings(r.predicted_labels(), table, policy, baseline);
    j["savings"] = {{"baseline", baseline},
                    {"router_cost", sim.router_cost},
                    {"baseline_cost", sim.baseline_cost},
                    {"savings_percent", sim.savings_percent},
                    {"paradigm_counts", sim.paradigm_counts}};
    j["policy_rows"] = policy_rows_json(policy_report(r, table, policy, baseline));
    return j;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline void write_predictions_csv(std::ostream& out, const EvalReport& r) {
    out << "id,domain,true,predicted,fold\n";
    for (const auto& p : r.predictions)
        out << csv_escape(p.id) << ',' << csv_escape(p.domain) << ',' << to_string(p.truth) << ',' << to_string(p.predicted)
            << ',' << p.fold << '\n';
}

// Splits one CSV record; quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

// Reads the per-query CSV written by write_predictions_csv.
inline std::vector<PooledPrediction> read_predictions_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"id", "domain", "true", "predicted", "fold"})
        throw DataError("predictions file must start with the header id,domain,true,predicted,fold");
    std::vector<PooledPrediction> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = "predictions line " + std::to_string(line_no);
        if (f.size() != 5) throw DataError(where + ": expected 5 fields, found " + std::to_string(f.size()));
        const auto t = try_parse_label(f[2]);
        const auto p = try_parse_label(f[3]);
        if (!t || !p) throw DataError(where + ": unknown label");
        std::size_t fold = 0;
        try {
            fold = static_cast<std::size_t>(std::stoull(f[4]));
        } catch (const std::exception&) {
            throw DataError(where + ": bad fold number \"" + f[4] + "\"");
        }
        out.push_back({f[0], f[1], *t, *p, fold});
    }
    if (out.empty()) throw DataError("predictions file has no rows");
    return out;
}

// ---------------------------------------------------------------------------
// Aligned text tables

class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
    void add_rule() { rows_.emplace_back(); }

    void render(std::ostream& out) const {
        std::vector<std::size_t> w(header_.size(), 0);
        auto widen = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
        };
        widen(header_);
        for (const auto& r : rows_) widen(r);
        std::size_t total = 0;
        for (auto x : w) total += x + 2;
        auto line = [&](const std::vector<std::string>& r) {
            std::string s;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const std::string cell = i < r.size() ? r[i] : "";
                if (i == 0) {
                    s += cell + std::string(w[i] - cell.size(), ' ');
                } else {
                    s += "  " + std::string(w[i] - cell.size(), ' ') + cell;
                }
            }
            while (!s.empty() && s.back() == ' ') s.pop_back();
            out << s << '\n';
        };
        const std::string rule(total > 2 ? total - 2 : total, '-');
        line(header_);
        out << rule << '\n';
        for (const auto& r : rows_) {
            if (r.empty()) {
                out << rule << '\n';
            } else {
                line(r);
            }
        }
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Canonical domains first, then any others alphabetically.
inline std::vector<std::string> ordered_domains(const std::vector<std::string>& present) {
    static const std::vector<std::string> canonical{"wiki", "literature", "legal", "medical"};
    std::vector<std::string> out;
    for (const auto& c : canonical)
        if (std::find(present.begin(), present.end(), c) != present.end()) out.push_back(c);
    std::vector<std::string> rest;
    for (const auto& p : present)
        if (std::find(canonical.begin(), canonical.end(), p) == canonical.end()) rest.push_back(p);
    std::sort(rest.begin(), rest.end());
    rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

} // namespace qroute
