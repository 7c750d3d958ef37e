#pragma once

// Multinomial logistic regression with an L2 penalty, fitted by full-batch
// gradient descent with Armijo backtracking.
//
// Objective (per-sample scale, same minimiser as sum-loss + ||W||^2 / (2C)):
//   J(W, b) = (1/n) * [ sum_i CE(softmax(W x_i + b), y_i) + ||W||^2 / (2C) ]
// Intercepts are not penalised.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/scores.hpp"
#include "qroute/classifiers/spec.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/labels.hpp"

namespace qroute {

struct LogRegModel {
    std::size_t dim = 0;
    std::vector<double> weights;  // kNumClasses x dim, row-major
    std::array<double, kNumClasses> intercept{};
    std::size_t iterations = 0;
    double final_loss = 0.0;
    double final_gradient_norm = 0.0;
    bool converged = false;

    static LogRegModel zeros(std::size_t dim) {
        LogRegModel m;
        m.dim = dim;
        m.weights.assign(kNumClasses * dim, 0.0);
        return m;
    }

    std::span<const double> class_weights(std::size_t c) const {
        return std::span<const double>(weights).subspan(c * dim, dim);
    }

    ClassScores logits(const RowView& x) const {
        ClassScores z;
        for (std::size_t c = 0; c < kNumClasses; ++c) z[c] = intercept[c] + x.dot(class_weights(c));
        return z;
    }

    ScoreMatrix predict_scores(const FeatureMatrix& x) const {
        ScoreMatrix s{ScoreKind::probability, {}};
        s.rows.reserve(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            ClassScores z = logits(x.row(r));
            softmax_in_place(z);
            s.rows.push_back(z);
        }
        return s;
    }

    nlohmann::json to_json() const {
        return {{"dim", dim},
                {"weights", weights},
                {"intercept", intercept},
                {"iterations", iterations},
                {"final_loss", final_loss},
                {"final_gradient_norm", final_gradient_norm},
                {"converged", converged}};
    }

    static LogRegModel from_json(const nlohmann::json& j) {
        LogRegModel m;
        m.dim = j.at("dim").get<std::size_t>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<std::array<double, kNumClasses>>();
        m.iterations = j.at("iterations").get<std::size_t>();
        m.final_loss = j.at("final_loss").get<double>();
        m.final_gradient_norm = j.at("final_gradient_norm").get<double>();
        m.converged = j.at("converged").get<bool>();
        if (m.weights.size() != kNumClasses * m.dim) throw DataError("logreg weight shape mismatch");
        return m;
    }
};

namespace detail {

struct LogRegProblem {
    const FeatureMatrix& x;
    std::span<const Label> y;
    double C;

    std::size_t n() const { return x.rows(); }
    std::size_t dim() const { return x.cols(); }

    // Returns J; fills grad (same layout as weights followed by intercepts) when non-null.
    double evaluate(const LogRegModel& m, std::vector<double>* grad) const {
        const std::size_t d = dim();
        const double inv_n = 1.0 / static_cast<double>(n());
        if (grad) grad->assign(kNumClasses * d + kNumClasses, 0.0);
        double loss = 0.0;
        for (std::size_t r = 0; r < n(); ++r) {
            const auto row = x.row(r);
            ClassScores z = m.logits(row);
            double mx = z[0];
            for (double v : z) mx = std::max(mx, v);
            double sum = 0.0;
            for (double v : z) sum += std::exp(v - mx);
            const double lse = mx + std::log(sum);
            const std::size_t t = index_of(y[r]);
            loss += lse - z[t];
            if (grad) {
                for (std::size_t c = 0; c < kNumClasses; ++c) {
                    const double p = std::exp(z[c] - lse);
                    const double delta = (p - (c == t ? 1.0 : 0.0)) * inv_n;
                    row.axpy(delta, std::span<double>(*grad).subspan(c * d, d));
                    (*grad)[kNumClasses * d + c] += delta;
                }
            }
        }
        double wnorm2 = 0.0;
        for (double w : m.weights) wnorm2 += w * w;
        const double reg = 1.0 / (2.0 * C);
        if (grad)
            for (std::size_t i = 0; i < m.weights.size(); ++i) (*grad)[i] += 2.0 * reg * m.weights[i] * inv_n;
        return (loss + reg * wnorm2) * inv_n;
    }
};

inline void step_model(const LogRegModel& from, const std::vector<double>& grad, double t, LogRegModel& to) {
    const std::size_t nw = from.weights.size();
    to.weights.resize(nw);
    for (std::size_t i = 0; i < nw; ++i) to.weights[i] = from.weights[i] - t * grad[i];
    for (std::size_t c = 0; c < kNumClasses; ++c) to.intercept[c] = from.intercept[c] - t * grad[nw + c];
}

} // namespace detail

// `loss_trace`, when given, receives J after every accepted step (index 0 is
// the initial objective).
inline LogRegModel fit_logreg(const FeatureMatrix& x, std::span<const Label> y, const LogRegParams& p,
                              std::vector<double>* loss_trace = nullptr) {
    detail::LogRegProblem prob{x, y, p.C};
    LogRegModel m = LogRegModel::zeros(x.cols());
    LogRegModel trial = m;
    std::vector<double> grad;
    double loss = prob.evaluate(m, &grad);
    if (loss_trace) loss_trace->assign(1, loss);
    double step = 1.0;
    auto norm = [](const std::vector<double>& g) {
        double s = 0.0;
        for (double v : g) s += v * v;
        return std::sqrt(s);
    };
    double gnorm = norm(grad);
    std::size_t it = 0;
    while (gnorm > p.gradient_tolerance && it < p.max_iterations) {
        const double g2 = gnorm * gnorm;
        double t = step * 2.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            detail::step_model(m, grad, t, trial);
            if (prob.evaluate(trial, nullptr) <= loss - 0.5 * t * g2) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // no representable descent step left
        step = t;
        std::swap(m.weights, trial.weights);
        m.intercept = trial.intercept;
        loss = prob.evaluate(m, &grad);
        gnorm = norm(grad);
        ++it;
        if (loss_trace) loss_trace->push_back(loss);
    }
    m.iterations = it;
    m.final_loss = loss;
    m.final_gradient_norm = gnorm;
    m.converged = gnorm <= p.gradient_tolerance;
    return m;
}

} // namespace qroute
