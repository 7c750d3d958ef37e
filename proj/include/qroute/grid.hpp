#pragma once

// The full classifier x feature-regime sweep and its three report tables.

#include <array>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/cost.hpp"
#include "qroute/eval.hpp"
#include "qroute/report.hpp"

namespace qroute {

inline constexpr std::array<FeatureKind, 3> kAllRegimes = {FeatureKind::tfidf, FeatureKind::embedding,
                                                           FeatureKind::structural};

struct GridCell {
    Family family = Family::logreg;
    FeatureKind regime = FeatureKind::tfidf;
    std::optional<EvalReport> report;
    std::string error;  // set when the cell failed

    bool ok() const { return report.has_value(); }
};

struct GridOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::optional<std::string> embeddings_path;
    std::optional<EmbedderInfo> fallback_embedder;
    std::size_t threads = default_thread_count();
    // Per-family hyperparameter overrides; defaults otherwise.
    std::optional<ClassifierSpec> spec_template;
    CostTable table;
    RoutingPolicy policy;
    std::string baseline = kIterativeRag;
};

struct GridResult {
    std::vector<GridCell> cells;  // family-major, kAllFamilies x kAllRegimes
    LabelCounts truth_counts{};
    std::vector<std::string> domains;
    GridOptions options;

    const GridCell* find(Family f, FeatureKind r) const {
        for (const auto& c : cells)
            if (c.family == f && c.regime == r) return &c;
        return nullptr;
    }

    const GridCell& cell(Family f, FeatureKind r) const {
        if (const auto* c = find(f, r)) return *c;
        throw std::out_of_range("grid cell not found");
    }

    std::vector<Family> families() const {
        std::vector<Family> out;
        for (Family f : kAllFamilies)
            for (const auto& c : cells)
                if (c.family == f) {
                    out.push_back(f);
                    break;
                }
        return out;
    }

    std::vector<FeatureKind> regimes() const {
        std::vector<FeatureKind> out;
        for (FeatureKind r : kAllRegimes)
            for (const auto& c : cells)
                if (c.regime == r) {
                    out.push_back(r);
                    break;
                }
        return out;
    }

    // Highest macro-F1 cell for a regime; ties go to the earlier family.
    const GridCell* best_for(FeatureKind r) const {
        const GridCell* best = nullptr;
        for (Family f : kAllFamilies) {
            const auto* c = find(f, r);
            if (c && c->ok() && (!best || c->report->macro_f1 > best->report->macro_f1)) best = c;
        }
        return best;
    }
};

using CellCallback = std::function<void(const GridCell&)>;

inline GridResult run_grid(const Dataset& ds, const GridOptions& opt, const CellCallback& on_cell = {}) {
    if (!opt.embeddings_path && !opt.fallback_embedder)
        throw UsageError("grid needs an embeddings file or the explicitly enabled fallback embedder");
    GridResult g;
    g.options = opt;
    g.truth_counts = ds.label_counts();
    for (const auto& [d, n] : ds.domain_counts()) g.domains.push_back(d);
    g.domains = ordered_domains(g.domains);
    for (Family f : kAllFamilies) {
        for (FeatureKind r : kAllRegimes) {
            GridCell cell{f, r, std::nullopt, {}};
            CrossValidationOptions cv;
            cv.regime = r;
            cv.spec = opt.spec_template.value_or(ClassifierSpec{});
            cv.spec.family = f;
            cv.spec.seed = opt.seed;
            cv.k = opt.k;
            cv.seed = opt.seed;
            cv.threads = opt.threads;
            if (r == FeatureKind::embedding) {
                cv.embeddings_path = opt.embeddings_path;
                if (!opt.embeddings_path) cv.fallback_embedder = opt.fallback_embedder;
            }
            try {
                cell.report = cross_validate(ds, cv);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            if (on_cell) on_cell(cell);
            g.cells.push_back(std::move(cell));
        }
    }
    return g;
}

namespace detail {

inline std::string mark(const std::string& s, bool best) { return best ? s + "*" : s + " "; }

} // namespace detail

// Classifier x regime accuracy (%) and macro-F1; '*' marks the column maximum
// of the printed values; majority-class row underneath.
inline void render_grid_table(std::ostream& out, const GridResult& g, bool csv) {
    if (csv) {
        out << "classifier,regime,accuracy_percent,macro_f1,status\n";
        for (const auto& c : g.cells) {
            out << to_string(c.family) << ',' << to_string(c.regime) << ',';
            if (c.ok()) {
                out << format_fixed(c.report->accuracy * 100.0, 1) << ',' << format_fixed(c.report->macro_f1, 3)
                    << ",ok\n";
            } else {
                out << ",," << csv_escape("error: " + c.error) << '\n';
            }
        }
        const auto maj = majority_row(g.truth_counts, g.options.table, g.options.policy, g.options.baseline);
        const double maj_acc = static_cast<double>(g.truth_counts[argmax_first(g.truth_counts)]) /
                               static_cast<double>(g.truth_counts[0] + g.truth_counts[1] + g.truth_counts[2]);
        out << "majority_class,all," << format_fixed(maj_acc * 100.0, 1) << ',' << format_fixed(maj.macro_f1, 3)
            << ",ok\n";
        return;
    }
    const auto regimes = g.regimes();
    std::vector<std::string> header{"Classifier"};
    for (FeatureKind r : regimes) {
        header.push_back(regime_title(r) + " Acc");
        header.push_back(regime_title(r) + " F1");
    }
    TextTable t(header);
    std::vector<std::string> best_acc(regimes.size()), best_f1(regimes.size());
    for (std::size_t ri = 0; ri < regimes.size(); ++ri) {
        double ba = -1, bf = -1;
        for (Family f : kAllFamilies) {
            const auto* c = g.find(f, regimes[ri]);
            if (!c || !c->ok()) continue;
            ba = std::max(ba, std::stod(format_fixed(c->report->accuracy * 100.0, 1)));
            bf = std::max(bf, std::stod(format_fixed(c->report->macro_f1, 3)));
        }
        best_acc[ri] = ba < 0 ? "" : format_fixed(ba, 1);
        best_f1[ri] = bf < 0 ? "" : format_fixed(bf, 3);
    }
    for (Family f : g.families()) {
        std::vector<std::string> row{std::string(display_name(f))};
        for (std::size_t ri = 0; ri < regimes.size(); ++ri) {
            const auto* c = g.find(f, regimes[ri]);
            if (!c) {
                row.push_back("");
                row.push_back("");
            } else if (!c->ok()) {
                row.push_back("ERR ");
                row.push_back("ERR ");
            } else {
                const auto a = format_fixed(c->report->accuracy * 100.0, 1);
                const auto m = format_fixed(c->report->macro_f1, 3);
                row.push_back(detail::mark(a, a == best_acc[ri]));
                row.push_back(detail::mark(m, m == best_f1[ri]));
            }
        }
        t.add_row(row);
    }
    t.add_rule();
    const auto maj = majority_row(g.truth_counts, g.options.table, g.options.policy, g.options.baseline);
    const std::size_t n = g.truth_counts[0] + g.truth_counts[1] + g.truth_counts[2];
    const double maj_acc = static_cast<double>(g.truth_counts[argmax_first(g.truth_counts)]) / static_cast<double>(n);
    std::vector<std::string> maj_line{"Majority class", format_fixed(maj_acc * 100.0, 1) + " ",
                                      format_fixed(maj.macro_f1, 3) + " "};
    while (maj_line.size() < header.size()) maj_line.push_back("---");
    t.add_row(maj_line);
    t.render(out);
    for (const auto& c : g.cells)
        if (!c.ok())
            out << "ERR " << display_name(c.family) << " / " << regime_title(c.regime) << ": " << c.error << '\n';
}

// Best configuration per regime with simulated savings, then the reference rows.
inline std::vector<PolicyRow> grid_policy_rows(const GridResult& g) {
    std::vector<PolicyRow> rows;
    for (FeatureKind r : kAllRegimes) {
        const auto* best = g.best_for(r);
        if (!best) continue;
        rows.push_back(policy_report(*best->report, g.options.table, g.options.policy, g.options.baseline).front());
    }
    rows.push_back(majority_row(g.truth_counts, g.options.table, g.options.policy, g.options.baseline));
    rows.push_back(perfect_label_row(g.truth_counts, g.options.table, g.options.policy, g.options.baseline));
    return rows;
}

inline void render_policy_table(std::ostream& out, const std::vector<PolicyRow>& rows, std::size_t n_router_rows,
                                bool csv) {
    if (csv) {
        out << "configuration,savings_percent,macro_f1\n";
        for (const auto& r : rows)
            out << csv_escape(r.configuration) << ',' << format_fixed(r.savings_percent, 1) << ','
                << format_fixed(r.macro_f1, 3) << '\n';
        return;
    }
    TextTable t({"Configuration", "Savings (%)", "Macro-F1"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == n_router_rows && i > 0) t.add_rule();
        t.add_row({rows[i].configuration, format_fixed(rows[i].savings_percent, 1), format_fixed(rows[i].macro_f1, 3)});
    }
    t.render(out);
}

// Per-domain macro-F1 of the best classifier per regime.
inline void render_domain_table(std::ostream& out, const GridResult& g, bool csv) {
    struct Row {
        std::string name;
        std::map<std::string, double> values;
    };
    std::vector<Row> rows;
    for (FeatureKind r : kAllRegimes) {
        const auto* best = g.best_for(r);
        if (!best) continue;
        rows.push_back({regime_title(r) + " (" + short_family(best->family) + ")", best->report->per_domain});
    }
    if (csv) {
        out << "feature_set";
        for (const auto& d : g.domains) out << ',' << csv_escape(d);
        out << '\n';
        for (const auto& r : rows) {
            out << csv_escape(r.name);
            for (const auto& d : g.domains) {
                auto it = r.values.find(d);
                out << ',' << (it == r.values.end() ? "" : format_fixed(it->second, 3));
            }
            out << '\n';
        }
        return;
    }
    std::vector<std::string> header{"Feature Set"};
    header.insert(header.end(), g.domains.begin(), g.domains.end());
    TextTable t(header);
    std::vector<std::string> best(g.domains.size());
    for (std::size_t di = 0; di < g.domains.size(); ++di) {
        double b = -1;
        for (const auto& r : rows) {
            auto it = r.values.find(g.domains[di]);
            if (it != r.values.end()) b = std::max(b, std::stod(format_fixed(it->second, 3)));
        }
        best[di] = b < 0 ? "" : format_fixed(b, 3);
    }
    for (const auto& r : rows) {
        std::vector<std::string> line{r.name};
        for (std::size_t di = 0; di < g.domains.size(); ++di) {
            auto it = r.values.find(g.domains[di]);
            if (it == r.values.end()) {
                line.push_back("--- ");
                continue;
            }
            const auto v = format_fixed(it->second, 3);
            line.push_back(detail::mark(v, v == best[di]));
        }
        t.add_row(line);
    }
    t.render(out);
}

inline nlohmann::ordered_json grid_to_json(const GridResult& g) {
    nlohmann::ordered_json j;
    j["k"] = g.options.k;
    j["seed"] = g.options.seed;
    j["n"] = g.truth_counts[0] + g.truth_counts[1] + g.truth_counts[2];
    j["label_counts"] = {{"single_hop", g.truth_counts[0]}, {"multi_hop", g.truth_counts[1]},
                         {"summary", g.truth_counts[2]}};
    j["embedding_source"] = g.options.embeddings_path ? "external" : "fallback_hash";
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : g.cells) {
        nlohmann::ordered_json jc;
        jc["classifier"] = std::string(to_string(c.family));
        jc["regime"] = std::string(to_string(c.regime));
        if (c.ok()) {
            jc["status"] = "ok";
            jc["report"] = report_to_json(*c.report, g.options.table, g.options.policy, g.options.baseline);
        } else {
            jc["status"] = "error";
            jc["error"] = c.error;
        }
        cells.push_back(jc);
    }
    j["cells"] = cells;
    j["policy_rows"] = policy_rows_json(grid_policy_rows(g));
    return j;
}

} // namespace qroute
