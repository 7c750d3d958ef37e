#pragma once

// Paradigm cost ratios, the query-type -> paradigm routing policy, and the
// token-savings simulation against an always-one-paradigm baseline.

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qroute/corpus.hpp"
#include "qroute/error.hpp"
#include "qroute/labels.hpp"
#include "qroute/metrics.hpp"

namespace qroute {

inline const std::string kLlmOnly = "LLM-Only";
inline const std::string kNaiveRag = "NaiveRAG";
inline const std::string kGraphRag = "GraphRAG";
inline const std::string kHybridRag = "HybridRAG";
inline const std::string kIterativeRag = "IterativeRAG";

struct CostTable {
    std::map<std::string, double> ratios{
        {kLlmOnly, 1.0}, {kNaiveRag, 1.4}, {kGraphRag, 2.1}, {kHybridRag, 2.8}, {kIterativeRag, 3.5}};

    double cost(const std::string& paradigm) const {
        auto it = ratios.find(paradigm);
        if (it == ratios.end()) throw UsageError("paradigm \"" + paradigm + "\" is not in the cost table");
        return it->second;
    }
    bool contains(const std::string& paradigm) const { return ratios.count(paradigm) > 0; }

    void validate() const {
        if (ratios.empty()) throw UsageError("cost table is empty");
        for (const auto& [p, r] : ratios)
            if (!(r > 0.0)) throw UsageError("cost ratio for " + p + " must be positive");
    }
};

struct RoutingPolicy {
    std::array<std::string, kNumClasses> paradigm{kNaiveRag, kHybridRag, kIterativeRag};

    const std::string& map_label(Label l) const { return paradigm[index_of(l)]; }

    void validate(const CostTable& table) const {
        for (Label l : kAllLabels)
            if (!table.contains(map_label(l)))
                throw UsageError("policy maps " + std::string(to_string(l)) + " to unknown paradigm \"" +
                                 map_label(l) + "\"");
    }
};

inline const std::string& map_label(const RoutingPolicy& policy, Label l) { return policy.map_label(l); }

struct SavingsResult {
    double router_cost = 0.0;    // sum of per-query cost ratios
    double baseline_cost = 0.0;  // N * cost(baseline)
    double savings_percent = 0.0;
    std::map<std::string, std::size_t> paradigm_counts;
    std::size_t n = 0;

    double mean_router_cost() const { return router_cost / static_cast<double>(n); }
};

namespace detail {

// Savings from per-label shares; shared by the simulated and closed-form routes
// so perfect-label simulation and the reference agree bit for bit.
inline double savings_from_shares(const std::array<double, kNumClasses>& share, const CostTable& table,
                                  const RoutingPolicy& policy, const std::string& baseline) {
    double mean_cost = 0.0;
    for (Label l : kAllLabels) mean_cost += share[index_of(l)] * table.cost(policy.map_label(l));
    const double base = table.cost(baseline);
    return (base - mean_cost) / base * 100.0;
}

} // namespace detail

inline SavingsResult simulate_savings(std::span<const Label> predicted, const CostTable& table = {},
                                      const RoutingPolicy& policy = {},
                                      const std::string& baseline = kIterativeRag) {
    if (predicted.empty()) throw DataError("simulate_savings: empty prediction list");
    table.validate();
    policy.validate(table);
    (void)table.cost(baseline);

    LabelCounts counts{};
    for (Label l : predicted) ++counts[index_of(l)];
    SavingsResult r;
    r.n = predicted.size();
    for (Label l : kAllLabels) {
        const auto c = counts[index_of(l)];
        if (c == 0) continue;
        r.paradigm_counts[policy.map_label(l)] += c;
    }
    for (const auto& [p, c] : r.paradigm_counts) r.router_cost += static_cast<double>(c) * table.cost(p);
    r.baseline_cost = static_cast<double>(r.n) * table.cost(baseline);
    r.savings_percent =
        detail::savings_from_shares(label_distribution(counts).proportion, table, policy, baseline);
    return r;
}

// Closed-form savings when every query is routed by its true type.
inline double reference_savings(const LabelDistribution& dist, const CostTable& table = {},
                                const RoutingPolicy& policy = {}, const std::string& baseline = kIterativeRag) {
    double sum = 0.0;
    for (double p : dist.proportion) {
        if (p < 0.0 || p > 1.0) throw DataError("reference_savings: proportion outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("reference_savings: proportions do not sum to 1");
    table.validate();
    policy.validate(table);
    return detail::savings_from_shares(dist.proportion, table, policy, baseline);
}

struct PolicyRow {
    std::string configuration;
    double savings_percent = 0.0;
    double macro_f1 = 0.0;
};

// Most frequent label, ties to class order.
inline Label majority_label(const LabelCounts& counts) { return label_at(argmax_first(counts)); }

// Majority-class baseline: (savings, macro-F1) fixed by the label counts.
inline PolicyRow majority_row(const LabelCounts& truth_counts, const CostTable& table = {},
                              const RoutingPolicy& policy = {}, const std::string& baseline = kIterativeRag) {
    const Label maj = majority_label(truth_counts);
    ConfusionMatrix cm;
    std::size_t n = 0;
    for (Label l : kAllLabels) {
        cm.counts[index_of(l)][index_of(maj)] = truth_counts[index_of(l)];
        n += truth_counts[index_of(l)];
    }
    std::vector<Label> preds(n, maj);
    return {"Majority class", simulate_savings(preds, table, policy, baseline).savings_percent, macro_f1(cm)};
}

inline PolicyRow perfect_label_row(const LabelCounts& truth_counts, const CostTable& table = {},
                                   const RoutingPolicy& policy = {}, const std::string& baseline = kIterativeRag) {
    return {"Perfect-label ref.", reference_savings(label_distribution(truth_counts), table, policy, baseline), 1.0};
}

// Router row plus the two reference rows, all derived from the same pooled predictions.
inline std::vector<PolicyRow> policy_report(const std::string& configuration, std::span<const Label> truth,
                                            std::span<const Label> predicted, const CostTable& table = {},
                                            const RoutingPolicy& policy = {},
                                            const std::string& baseline = kIterativeRag) {
    LabelCounts tc{};
    for (Label l : truth) ++tc[index_of(l)];
    std::vector<PolicyRow> rows;
    rows.push_back({configuration, simulate_savings(predicted, table, policy, baseline).savings_percent,
                    macro_f1(confusion(truth, predicted))});
    rows.push_back(majority_row(tc, table, policy, baseline));
    rows.push_back(perfect_label_row(tc, table, policy, baseline));
    return rows;
}

} // namespace qroute
