#pragma once

// Dense sentence-embedding ingestion (tab-separated file written by the
// external exporter) and a deterministic hashed substitute embedder.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "qroute/corpus.hpp"
#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/random.hpp"
#include "qroute/tfidf.hpp"

namespace qroute {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t b = 0;
    for (;;) {
        auto e = line.find('\t', b);
        out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
        if (e == std::string_view::npos) break;
        b = e + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
    std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw DataError(where + ": cannot parse value \"" + tmp + "\"");
    if (!std::isfinite(v)) throw DataError(where + ": non-finite value");
    return v;
}

} // namespace detail

// Header "n<TAB>dim", then n lines "id<TAB>v1<TAB>...<TAB>vdim". Rows are
// returned in dataset order; ids present in the file but not in the dataset
// are ignored.
inline FeatureMatrix parse_embeddings(std::istream& in, const Dataset& ds) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("embedding file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_tabs(line);
    if (header.size() != 2) throw DataError("embedding header must be \"n<TAB>dim\"");
    std::size_t n = 0, dim = 0;
    auto parse_size = [](std::string_view s, std::size_t& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!parse_size(header[0], n) || !parse_size(header[1], dim) || dim == 0)
        throw DataError("embedding header must be \"n<TAB>dim\" with positive integers");

    std::unordered_map<std::string, std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        const std::string id(fields[0]);
        const std::string where = "embedding line " + std::to_string(line_no) + " (id " + id + ")";
        if (fields.size() - 1 != dim)
            throw DataError(where + ": expected " + std::to_string(dim) + " values, found " +
                            std::to_string(fields.size() - 1));
        std::vector<double> v(dim);
        for (std::size_t c = 0; c < dim; ++c) v[c] = detail::parse_double(fields[c + 1], where);
        if (!rows.emplace(id, std::move(v)).second) throw DataError(where + ": duplicate id");
    }
    if (rows.size() != n)
        throw DataError("embedding header declares " + std::to_string(n) + " rows, file has " +
                        std::to_string(rows.size()));

    FeatureMatrix m = FeatureMatrix::dense(FeatureKind::embedding, dim);
    for (const auto& r : ds.records()) {
        auto it = rows.find(r.id);
        if (it == rows.end()) throw DataError("embedding file has no row for id " + r.id);
        m.add_dense_row(it->second, r.id);
    }
    return m;
}

inline FeatureMatrix load_embeddings(const std::string& path, const Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file " + path);
    return parse_embeddings(in, ds);
}

inline void write_embeddings(std::ostream& out, const FeatureMatrix& m) {
    out << m.rows() << '\t' << m.cols() << '\n';
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.ids()[r];
        for (std::size_t c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m.at(r, c));
            out << '\t' << buf;
        }
        out << '\n';
    }
}

// Sum of per-token pseudo-random basis vectors (uniform in [-1, 1], seeded by
// the token hash and the embedder seed), L2-normalized. Empty or token-free
// text maps to the zero vector.
inline std::vector<double> fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw UsageError("fallback_embed: dim must be >= 1");
    std::vector<double> v(dim, 0.0);
    for (const auto& tok : tokenize(text)) {
        std::uint64_t state = derive_seed(seed, fnv1a64(tok));
        for (std::size_t c = 0; c < dim; ++c) {
            state = splitmix64(state);
            v[c] += static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
    }
    return v;
}

inline FeatureMatrix fallback_embed_all(const Dataset& ds, std::size_t dim, std::uint64_t seed) {
    FeatureMatrix m = FeatureMatrix::dense(FeatureKind::embedding, dim);
    for (const auto& r : ds.records()) m.add_dense_row(fallback_embed(r.text, dim, seed), r.id);
    return m;
}

} // namespace qroute
