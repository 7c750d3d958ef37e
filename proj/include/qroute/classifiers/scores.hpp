#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "qroute/labels.hpp"

namespace qroute {

enum class ScoreKind { probability, margin, vote_fraction };

inline std::string_view to_string(ScoreKind k) noexcept {
    switch (k) {
    case ScoreKind::probability: return "probability";
    case ScoreKind::margin: return "margin";
    case ScoreKind::vote_fraction: return "vote_fraction";
    }
    return "unknown";
}

using ClassScores = std::array<double, kNumClasses>;

struct ScoreMatrix {
    ScoreKind kind = ScoreKind::probability;
    std::vector<ClassScores> rows;

    // Argmax per row with the class-order tie-break.
    std::vector<Label> argmax() const {
        std::vector<Label> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(label_at(argmax_first(r)));
        return out;
    }
};

// Numerically stable softmax over one row of logits, in place.
inline void softmax_in_place(std::span<double> z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

} // namespace qroute
