#pragma once

// RBF-kernel support vector machine: SMO solver for the binary dual and a
// one-vs-rest multiclass wrapper.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/scores.hpp"
#include "qroute/classifiers/spec.hpp"
#include "qroute/error.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/labels.hpp"

namespace qroute {

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size())
        throw DataError("rbf_kernel: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    if (!(gamma > 0.0)) throw UsageError("rbf_kernel: gamma must be positive");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

// Same kernel for matrix rows given precomputed squared norms.
inline double rbf_kernel(const RowView& a, double a_norm2, const RowView& b, double b_norm2, double gamma) {
    const double d2 = std::max(0.0, a_norm2 + b_norm2 - 2.0 * dot(a, b));
    return std::exp(-gamma * d2);
}

// gamma = 1 / (d * var(X)), var over every entry (zeros included); 1/d when var == 0.
inline double gamma_scale(const FeatureMatrix& x) {
    const double d = static_cast<double>(x.cols());
    const double count = static_cast<double>(x.rows()) * d;
    if (count == 0.0) throw DataError("gamma_scale: empty matrix");
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r)
        x.row(r).for_each_nonzero([&](std::size_t, double v) {
            sum += v;
            sum2 += v * v;
        });
    const double mean = sum / count;
    const double var = std::max(0.0, sum2 / count - mean * mean);
    return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

// Kernel access for the solver: a precomputed symmetric matrix.
class DenseKernel {
public:
    DenseKernel(std::vector<double> values, std::size_t n) : values_(std::move(values)), n_(n) {
        if (values_.size() != n * n) throw DataError("kernel matrix is not square");
    }
    std::size_t size() const noexcept { return n_; }
    std::span<const double> row(std::size_t i) { return std::span<const double>(values_).subspan(i * n_, n_); }
    double diagonal(std::size_t i) const { return values_[i * n_ + i]; }

private:
    std::vector<double> values_;
    std::size_t n_;
};

// RBF kernel rows computed on demand and kept in an LRU cache.
class CachedRbfKernel {
public:
    CachedRbfKernel(const FeatureMatrix& x, double gamma, std::size_t cache_megabytes)
        : x_(x), gamma_(gamma) {
        norms_.reserve(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) norms_.push_back(x.row(r).squared_norm());
        const std::size_t row_bytes = std::max<std::size_t>(1, x.rows()) * sizeof(double);
        capacity_ = std::max<std::size_t>(2, cache_megabytes * 1024 * 1024 / row_bytes);
    }

    std::size_t size() const noexcept { return x_.rows(); }
    double diagonal(std::size_t) const { return 1.0; }
    std::uint64_t evaluations() const noexcept { return evaluations_; }

    std::span<const double> row(std::size_t i) {
        auto it = index_.find(i);
        if (it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->values;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().row);
            lru_.pop_back();
        }
        Entry e{i, std::vector<double>(size())};
        const auto ri = x_.row(i);
        for (std::size_t j = 0; j < size(); ++j) e.values[j] = rbf_kernel(ri, norms_[i], x_.row(j), norms_[j], gamma_);
        evaluations_ += size();
        lru_.push_front(std::move(e));
        index_[i] = lru_.begin();
        return lru_.front().values;
    }

private:
    struct Entry {
        std::size_t row;
        std::vector<double> values;
    };
    const FeatureMatrix& x_;
    double gamma_;
    std::vector<double> norms_;
    std::size_t capacity_;
    std::list<Entry> lru_;
    std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
    std::uint64_t evaluations_ = 0;
};

struct BinarySvmSolution {
    std::vector<double> alpha;
    double intercept = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double violation = 0.0;  // max KKT violation m(alpha) - M(alpha) at exit
    double objective = 0.0;  // dual objective sum(alpha) - 0.5 alpha' Q alpha
};

namespace detail {

inline bool in_up(double y, double a, double C) { return (y > 0 && a < C) || (y < 0 && a > 0); }
inline bool in_low(double y, double a, double C) { return (y > 0 && a > 0) || (y < 0 && a < C); }

} // namespace detail

// SMO on   max  sum(a) - 0.5 sum_ij a_i a_j y_i y_j K_ij
//          s.t. 0 <= a_i <= C,  sum a_i y_i = 0
// with the maximal-violating-pair working set. Stops when the KKT gap
// m(a) - M(a) drops below tol, or after max_iterations (converged = false,
// last iterate returned). Decision function: f(x) = sum a_i y_i K(x_i, x) + intercept.
template <typename Kernel>
BinarySvmSolution solve_binary_svm(Kernel& kernel, std::span<const double> y, double C, double tol,
                                   std::size_t max_iterations = 1000000) {
    const std::size_t n = kernel.size();
    if (y.size() != n) throw DataError("solve_binary_svm: label count does not match kernel size");
    for (double v : y)
        if (v != 1.0 && v != -1.0) throw DataError("solve_binary_svm: labels must be +1 or -1");

    BinarySvmSolution sol;
    sol.alpha.assign(n, 0.0);
    auto& a = sol.alpha;
    std::vector<double> grad(n, -1.0);  // gradient of 0.5 a'Qa - e'a
    constexpr double kTau = 1e-12;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    for (;;) {
        double gmax = -kInf, gmin = kInf;
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (detail::in_up(y[t], a[t], C) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (detail::in_low(y[t], a[t], C) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        sol.violation = (i == n || j == n) ? 0.0 : gmax - gmin;
        if (i == n || j == n || gmax - gmin < tol) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= max_iterations) break;
        ++sol.iterations;

        const auto ki = kernel.row(i);
        const auto kj = kernel.row(j);
        const double old_ai = a[i], old_aj = a[j];
        double quad = ki[i] + kj[j] - 2.0 * ki[j];
        if (quad <= 0.0) quad = kTau;
        if (y[i] != y[j]) {
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0) {
                if (a[j] < 0) {
                    a[j] = 0;
                    a[i] = diff;
                }
            } else if (a[i] < 0) {
                a[i] = 0;
                a[j] = -diff;
            }
            if (diff > 0) {
                if (a[i] > C) {
                    a[i] = C;
                    a[j] = C - diff;
                }
            } else if (a[j] > C) {
                a[j] = C;
                a[i] = C + diff;
            }
        } else {
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > C) {
                if (a[i] > C) {
                    a[i] = C;
                    a[j] = sum - C;
                }
            } else if (a[j] < 0) {
                a[j] = 0;
                a[i] = sum;
            }
            if (sum > C) {
                if (a[j] > C) {
                    a[j] = C;
                    a[i] = sum - C;
                }
            } else if (a[i] < 0) {
                a[i] = 0;
                a[j] = sum;
            }
        }
        const double di = a[i] - old_ai, dj = a[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
    }

    // Intercept: mean over free vectors, else midpoint of the feasible interval.
    double ub = kInf, lb = -kInf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (a[t] >= C) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (a[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    double rho;
    if (n_free > 0) rho = sum_free / static_cast<double>(n_free);
    else if (std::isinf(ub) && std::isinf(lb)) rho = 0.0;
    else if (std::isinf(ub)) rho = lb;
    else if (std::isinf(lb)) rho = ub;
    else rho = 0.5 * (ub + lb);
    sol.intercept = -rho;

    // objective = -(0.5 a'Qa - e'a) = -0.5 * sum a_t (grad_t - 1)
    double half_quad_minus_lin = 0.0;
    for (std::size_t t = 0; t < n; ++t) half_quad_minus_lin += a[t] * (grad[t] - 1.0);
    sol.objective = -0.5 * half_quad_minus_lin;
    return sol;
}

// One-vs-rest RBF machine. Support vectors of all three binary problems are
// pooled; each problem keeps a coefficient (alpha * y) per pooled vector.
struct SvmModel {
    double gamma = 1.0;
    FeatureMatrix support;
    std::vector<double> support_norm2;
    std::array<std::vector<double>, kNumClasses> coef;
    std::array<double, kNumClasses> intercept{};
    std::array<std::size_t, kNumClasses> iterations{};
    std::array<bool, kNumClasses> converged{};

    std::size_t dim() const { return support.cols(); }

    ScoreMatrix predict_scores(const FeatureMatrix& x) const {
        ScoreMatrix s{ScoreKind::margin, {}};
        s.rows.reserve(x.rows());
        std::vector<double> k(support.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const auto row = x.row(r);
            const double n2 = row.squared_norm();
            for (std::size_t v = 0; v < support.rows(); ++v)
                k[v] = rbf_kernel(row, n2, support.row(v), support_norm2[v], gamma);
            ClassScores out;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                double f = intercept[c];
                for (std::size_t v = 0; v < k.size(); ++v) f += coef[c][v] * k[v];
                out[c] = f;
            }
            s.rows.push_back(out);
        }
        return s;
    }

    void compute_norms() {
        support_norm2.clear();
        for (std::size_t v = 0; v < support.rows(); ++v) support_norm2.push_back(support.row(v).squared_norm());
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["gamma"] = gamma;
        j["support"] = support.to_json();
        j["coef"] = coef;
        j["intercept"] = intercept;
        j["iterations"] = iterations;
        j["converged"] = converged;
        return j;
    }

    static SvmModel from_json(const nlohmann::json& j) {
        SvmModel m;
        m.gamma = j.at("gamma").get<double>();
        m.support = FeatureMatrix::from_json(j.at("support"));
        m.coef = j.at("coef").get<std::array<std::vector<double>, kNumClasses>>();
        m.intercept = j.at("intercept").get<std::array<double, kNumClasses>>();
        m.iterations = j.at("iterations").get<std::array<std::size_t, kNumClasses>>();
        m.converged = j.at("converged").get<std::array<bool, kNumClasses>>();
        for (const auto& c : m.coef)
            if (c.size() != m.support.rows()) throw DataError("svm coefficient shape mismatch");
        m.compute_norms();
        return m;
    }
};

// Per-problem training record (labels and full dual vector), for diagnostics and tests.
struct OvrTrace {
    double gamma = 0.0;
    std::array<std::vector<double>, kNumClasses> y;
    std::array<BinarySvmSolution, kNumClasses> solutions;
};

inline SvmModel fit_svm(const FeatureMatrix& x, std::span<const Label> labels, const SvmParams& p,
                        OvrTrace* trace = nullptr) {
    const std::size_t n = x.rows();
    SvmModel m;
    m.gamma = p.gamma ? *p.gamma : gamma_scale(x);
    CachedRbfKernel kernel(x, m.gamma, p.cache_megabytes);

    std::array<BinarySvmSolution, kNumClasses> sols;
    std::array<std::vector<double>, kNumClasses> ys;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& y = ys[c];
        y.resize(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = index_of(labels[i]) == c ? 1.0 : -1.0;
            (y[i] > 0 ? has_pos : has_neg) = true;
        }
        if (has_pos && has_neg) {
            sols[c] = solve_binary_svm(kernel, y, p.C, p.tolerance, p.max_iterations);
        } else {
            // Class absent (or the only class): constant margin.
            sols[c].alpha.assign(n, 0.0);
            sols[c].intercept = has_pos ? 1.0 : -1.0;
            sols[c].converged = true;
        }
    }

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i) {
        bool used = false;
        for (const auto& s : sols) used = used || s.alpha[i] > 0.0;
        if (used) sv.push_back(i);
    }
    m.support = x.select_rows(sv);
    m.support.set_ids(std::vector<std::string>(sv.size()));
    m.compute_norms();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        m.coef[c].resize(sv.size());
        for (std::size_t v = 0; v < sv.size(); ++v) m.coef[c][v] = sols[c].alpha[sv[v]] * ys[c][sv[v]];
        m.intercept[c] = sols[c].intercept;
        m.iterations[c] = sols[c].iterations;
        m.converged[c] = sols[c].converged;
    }
    if (trace) {
        trace->gamma = m.gamma;
        trace->y = std::move(ys);
        trace->solutions = std::move(sols);
    }
    return m;
}

} // namespace qroute
