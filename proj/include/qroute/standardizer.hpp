#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <json.hpp>

#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"

namespace qroute {

// Per-column z-scoring with population deviation. Zero-deviation columns use
// divisor 1, so they map to 0 on the fitting rows.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> deviation;

    std::size_t cols() const noexcept { return mean.size(); }
    bool is_constant(std::size_t c) const { return deviation[c] == 0.0; }

    nlohmann::json to_json() const { return {{"mean", mean}, {"deviation", deviation}}; }
    static Standardizer from_json(const nlohmann::json& j) {
        Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("deviation").get<std::vector<double>>()};
        if (s.mean.size() != s.deviation.size()) throw DataError("inconsistent standardizer");
        return s;
    }
};

inline Standardizer fit_standardizer(const FeatureMatrix& x) {
    if (x.is_sparse()) throw UsageError("fit_standardizer expects a dense matrix");
    if (x.rows() == 0 || x.cols() == 0) throw DataError("fit_standardizer: empty matrix");
    const std::size_t n = x.rows(), d = x.cols();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r).value;
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
    }
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = x.row(r).value;
        for (std::size_t c = 0; c < d; ++c) {
            const double dv = row[c] - s.mean[c];
            s.deviation[c] += dv * dv;
        }
    }
    // Deviations at rounding-noise level (constant columns whose mean is not
    // exactly representable) are treated as zero.
    for (std::size_t c = 0; c < d; ++c) {
        const double dev = std::sqrt(s.deviation[c] / static_cast<double>(n));
        s.deviation[c] = dev <= 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? 0.0 : dev;
    }
    return s;
}

inline void standardize_in_place(const Standardizer& s, std::span<double> row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
        const double div = s.deviation[c] == 0.0 ? 1.0 : s.deviation[c];
        row[c] = (row[c] - s.mean[c]) / div;
    }
}

inline FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& x) {
    if (x.is_sparse()) throw UsageError("apply_standardizer expects a dense matrix");
    if (x.cols() != s.cols())
        throw DataError("standardizer has " + std::to_string(s.cols()) + " columns, input has " +
                        std::to_string(x.cols()));
    FeatureMatrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) standardize_in_place(s, out.dense_row_mut(r));
    return out;
}

} // namespace qroute
