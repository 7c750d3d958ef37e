#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qroute/error.hpp"

namespace qroute {

enum class FeatureKind { tfidf, embedding, structural };

inline std::string_view to_string(FeatureKind k) noexcept {
    switch (k) {
    case FeatureKind::tfidf: return "tfidf";
    case FeatureKind::embedding: return "embedding";
    case FeatureKind::structural: return "structural";
    }
    return "unknown";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
    if (s == "tfidf") return FeatureKind::tfidf;
    if (s == "embedding") return FeatureKind::embedding;
    if (s == "structural") return FeatureKind::structural;
    throw UsageError("unknown feature regime \"" + std::string(s) + "\" (expected tfidf, embedding or structural)");
}

// A view of one matrix row. Sparse rows carry (index, value) pairs sorted by
// index; dense rows carry every column.
struct RowView {
    std::span<const std::uint32_t> index;  // empty for dense rows
    std::span<const double> value;
    bool sparse = false;

    template <typename F>
    void for_each_nonzero(F&& f) const {
        if (sparse) {
            for (std::size_t p = 0; p < value.size(); ++p) f(static_cast<std::size_t>(index[p]), value[p]);
        } else {
            for (std::size_t c = 0; c < value.size(); ++c)
                if (value[c] != 0.0) f(c, value[c]);
        }
    }

    double dot(std::span<const double> w) const {
        double s = 0.0;
        if (sparse) {
            for (std::size_t p = 0; p < value.size(); ++p) s += value[p] * w[index[p]];
        } else {
            for (std::size_t c = 0; c < value.size(); ++c) s += value[c] * w[c];
        }
        return s;
    }

    // out += alpha * row
    void axpy(double alpha, std::span<double> out) const {
        if (sparse) {
            for (std::size_t p = 0; p < value.size(); ++p) out[index[p]] += alpha * value[p];
        } else {
            for (std::size_t c = 0; c < value.size(); ++c) out[c] += alpha * value[c];
        }
    }

    double squared_norm() const {
        double s = 0.0;
        for (double v : value) s += v * v;
        return s;
    }
};

inline double dot(const RowView& a, const RowView& b) {
    if (!a.sparse) return b.dot(a.value);
    if (!b.sparse) return a.dot(b.value);
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.index.size() && j < b.index.size()) {
        if (a.index[i] < b.index[j]) {
            ++i;
        } else if (a.index[i] > b.index[j]) {
            ++j;
        } else {
            s += a.value[i++] * b.value[j++];
        }
    }
    return s;
}

// Row-aligned features. Sparse storage is CSR with strictly nonzero values;
// dense storage is row-major.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    static FeatureMatrix dense(FeatureKind kind, std::size_t cols) {
        FeatureMatrix m;
        m.kind_ = kind;
        m.cols_ = cols;
        m.sparse_ = false;
        return m;
    }
    static FeatureMatrix sparse(FeatureKind kind, std::size_t cols) {
        FeatureMatrix m;
        m.kind_ = kind;
        m.cols_ = cols;
        m.sparse_ = true;
        return m;
    }

    FeatureKind kind() const noexcept { return kind_; }
    bool is_sparse() const noexcept { return sparse_; }
    std::size_t rows() const noexcept { return sparse_ ? row_ptr_.size() - 1 : dense_rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    void add_dense_row(std::span<const double> row, std::string id = {}) {
        if (sparse_) throw std::logic_error("add_dense_row on a sparse matrix");
        if (row.size() != cols_)
            throw DataError("row length " + std::to_string(row.size()) + " does not match column count " +
                            std::to_string(cols_));
        values_.insert(values_.end(), row.begin(), row.end());
        ++dense_rows_;
        ids_.push_back(std::move(id));
    }

    // Entries must be sorted by column; zeros are dropped.
    void add_sparse_row(std::span<const std::uint32_t> index, std::span<const double> value, std::string id = {}) {
        if (!sparse_) throw std::logic_error("add_sparse_row on a dense matrix");
        for (std::size_t p = 0; p < index.size(); ++p) {
            if (index[p] >= cols_) throw DataError("sparse column index out of range");
            if (p > 0 && index[p] <= index[p - 1]) throw DataError("sparse row indices not strictly increasing");
            if (value[p] == 0.0) continue;
            col_index_.push_back(index[p]);
            values_.push_back(value[p]);
        }
        row_ptr_.push_back(values_.size());
        ids_.push_back(std::move(id));
    }

    RowView row(std::size_t r) const {
        if (sparse_) {
            const std::size_t b = row_ptr_[r], e = row_ptr_[r + 1];
            return {std::span<const std::uint32_t>(col_index_).subspan(b, e - b),
                    std::span<const double>(values_).subspan(b, e - b), true};
        }
        return {{}, std::span<const double>(values_).subspan(r * cols_, cols_), false};
    }

    std::span<double> dense_row_mut(std::size_t r) {
        if (sparse_) throw std::logic_error("dense_row_mut on a sparse matrix");
        return std::span<double>(values_).subspan(r * cols_, cols_);
    }

    FeatureMatrix select_rows(std::span<const std::size_t> rows_wanted) const {
        FeatureMatrix out = sparse_ ? sparse(kind_, cols_) : dense(kind_, cols_);
        for (std::size_t r : rows_wanted) {
            const auto v = row(r);
            if (sparse_) {
                out.add_sparse_row(v.index, v.value, ids_[r]);
            } else {
                out.add_dense_row(v.value, ids_[r]);
            }
        }
        return out;
    }

    FeatureMatrix to_dense() const {
        if (!sparse_) return *this;
        FeatureMatrix out = dense(kind_, cols_);
        std::vector<double> buf(cols_);
        for (std::size_t r = 0; r < rows(); ++r) {
            std::fill(buf.begin(), buf.end(), 0.0);
            row(r).for_each_nonzero([&](std::size_t c, double v) { buf[c] = v; });
            out.add_dense_row(buf, ids_[r]);
        }
        return out;
    }

    double at(std::size_t r, std::size_t c) const {
        double found = 0.0;
        const auto v = row(r);
        if (!v.sparse) return v.value[c];
        for (std::size_t p = 0; p < v.index.size(); ++p)
            if (v.index[p] == c) found = v.value[p];
        return found;
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void set_ids(std::vector<std::string> ids) {
        if (ids.size() != rows()) throw DataError("id count does not match row count");
        ids_ = std::move(ids);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = std::string(to_string(kind_));
        j["cols"] = cols_;
        j["sparse"] = sparse_;
        j["rows"] = rows();
        if (sparse_) {
            j["row_ptr"] = row_ptr_;
            j["col_index"] = col_index_;
        }
        j["values"] = values_;
        return j;
    }

    static FeatureMatrix from_json(const nlohmann::json& j) {
        const auto kind = parse_feature_kind(j.at("kind").get<std::string>());
        const auto cols = j.at("cols").get<std::size_t>();
        FeatureMatrix m = j.at("sparse").get<bool>() ? sparse(kind, cols) : dense(kind, cols);
        m.values_ = j.at("values").get<std::vector<double>>();
        const auto n = j.at("rows").get<std::size_t>();
        if (m.sparse_) {
            m.row_ptr_ = j.at("row_ptr").get<std::vector<std::size_t>>();
            m.col_index_ = j.at("col_index").get<std::vector<std::uint32_t>>();
            if (m.row_ptr_.size() != n + 1 || m.row_ptr_.back() != m.values_.size() ||
                m.col_index_.size() != m.values_.size())
                throw DataError("inconsistent sparse matrix in model file");
        } else {
            if (m.values_.size() != n * cols) throw DataError("inconsistent dense matrix in model file");
            m.dense_rows_ = n;
        }
        m.ids_.assign(n, std::string{});
        return m;
    }

private:
    FeatureKind kind_ = FeatureKind::structural;
    std::size_t cols_ = 0;
    bool sparse_ = false;
    std::size_t dense_rows_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_index_;
    std::vector<double> values_;
    std::vector<std::string> ids_;
};

} // namespace qroute
