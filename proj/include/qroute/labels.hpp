#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "qroute/error.hpp"

namespace qroute {

// Query type. The enumerator order is the canonical class order used for
// score columns, confusion matrices and every argmax tie-break.
enum class Label : std::size_t { single_hop = 0, multi_hop = 1, summary = 2 };

inline constexpr std::size_t kNumClasses = 3;

inline constexpr std::array<Label, kNumClasses> kAllLabels = {Label::single_hop, Label::multi_hop,
                                                              Label::summary};

inline constexpr std::size_t index_of(Label l) noexcept { return static_cast<std::size_t>(l); }

inline constexpr Label label_at(std::size_t i) noexcept { return static_cast<Label>(i); }

inline constexpr std::string_view to_string(Label l) noexcept {
    switch (l) {
    case Label::single_hop: return "single_hop";
    case Label::multi_hop: return "multi_hop";
    case Label::summary: return "summary";
    }
    return "unknown";
}

inline std::optional<Label> try_parse_label(std::string_view s) noexcept {
    for (Label l : kAllLabels)
        if (to_string(l) == s) return l;
    return std::nullopt;
}

inline Label parse_label(std::string_view s) {
    if (auto l = try_parse_label(s)) return *l;
    throw DataError("unknown label \"" + std::string(s) +
                    "\" (accepted values: single_hop, multi_hop, summary)");
}

// Index of the largest entry; ties go to the lowest index (class order).
template <typename Range>
std::size_t argmax_first(const Range& values) {
    std::size_t best = 0;
    std::size_t i = 0;
    for (auto v : values) {
        if (v > values[best]) best = i;
        ++i;
    }
    return best;
}

} // namespace qroute
