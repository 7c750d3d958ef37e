#pragma once

#include <array>
#include <span>
#include <string>

#include "qroute/error.hpp"
#include "qroute/labels.hpp"

namespace qroute {

// counts[true][predicted] in class order.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

    std::size_t total() const noexcept {
        std::size_t t = 0;
        for (const auto& r : counts)
            for (auto c : r) t += c;
        return t;
    }
    std::size_t trace() const noexcept {
        std::size_t t = 0;
        for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
        return t;
    }
    std::size_t row_sum(std::size_t i) const noexcept {
        std::size_t s = 0;
        for (auto c : counts[i]) s += c;
        return s;
    }
    std::size_t col_sum(std::size_t j) const noexcept {
        std::size_t s = 0;
        for (const auto& r : counts) s += r[j];
        return s;
    }
    void add(Label truth, Label predicted) { ++counts[index_of(truth)][index_of(predicted)]; }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
    if (y_true.size() != y_pred.size())
        throw DataError("confusion: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                        std::to_string(y_pred.size()) + ")");
    if (y_true.empty()) throw DataError("confusion: empty label lists");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Any 0/0 ratio is 0, including F1 of a class never present nor predicted.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, Label l) {
    const std::size_t i = index_of(l);
    const double tp = static_cast<double>(cm.counts[i][i]);
    const double col = static_cast<double>(cm.col_sum(i));
    const double row = static_cast<double>(cm.row_sum(i));
    ClassMetrics m;
    m.precision = col > 0 ? tp / col : 0.0;
    m.recall = row > 0 ? tp / row : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

inline double macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("macro_f1: empty confusion matrix");
    double s = 0.0;
    for (Label l : kAllLabels) s += class_metrics(cm, l).f1;
    return s / static_cast<double>(kNumClasses);
}

inline double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("accuracy: empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

} // namespace qroute
