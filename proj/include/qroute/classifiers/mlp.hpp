#pragma once

// Multilayer perceptron: ReLU hidden layers, softmax output, mean
// cross-entropy, Adam, minibatches of 32, early stopping on a stratified
// validation split (restores the best-validation-loss weights).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "qroute/classifiers/scores.hpp"
#include "qroute/classifiers/spec.hpp"
#include "qroute/feature_matrix.hpp"
#include "qroute/labels.hpp"
#include "qroute/random.hpp"

namespace qroute {

// Weights are stored input-major: weights[i * out + j] connects input i to unit j.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    std::span<const double> fan_out(std::size_t i) const {
        return std::span<const double>(weights).subspan(i * out, out);
    }
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    std::vector<double> validation_loss;

    std::size_t dim() const { return layers.empty() ? 0 : layers.front().in; }

    // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    static MlpModel glorot(std::size_t dim, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
        MlpModel m;
        Rng rng(seed);
        std::size_t in = dim;
        std::vector<std::size_t> sizes(hidden);
        sizes.push_back(kNumClasses);
        for (std::size_t out : sizes) {
            DenseLayer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            for (double& w : l.weights) w = rng.uniform(-bound, bound);
            m.layers.push_back(std::move(l));
            in = out;
        }
        return m;
    }

    static MlpModel zeros(std::size_t dim, const std::vector<std::size_t>& hidden) {
        MlpModel m = glorot(dim, hidden, 0);
        for (auto& l : m.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
        return m;
    }

    // Fills activations[l] with the post-activation output of layer l (the
    // last entry holds logits); returns nothing.
    void forward(const RowView& x, std::vector<std::vector<double>>& act) const {
        act.resize(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& L = layers[l];
            auto& z = act[l];
            z.assign(L.bias.begin(), L.bias.end());
            if (l == 0) {
                x.for_each_nonzero([&](std::size_t i, double v) {
                    const auto w = L.fan_out(i);
                    for (std::size_t j = 0; j < L.out; ++j) z[j] += v * w[j];
                });
            } else {
                const auto& prev = act[l - 1];
                for (std::size_t i = 0; i < L.in; ++i) {
                    const double v = prev[i];
                    if (v == 0.0) continue;
                    const auto w = L.fan_out(i);
                    for (std::size_t j = 0; j < L.out; ++j) z[j] += v * w[j];
                }
            }
            if (l + 1 < layers.size())
                for (double& v : z) v = std::max(0.0, v);
        }
    }

    ScoreMatrix predict_scores(const FeatureMatrix& x) const {
        ScoreMatrix s{ScoreKind::probability, {}};
        s.rows.reserve(x.rows());
        std::vector<std::vector<double>> act;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            forward(x.row(r), act);
            ClassScores p;
            std::copy(act.back().begin(), act.back().end(), p.begin());
            softmax_in_place(p);
            s.rows.push_back(p);
        }
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& l : layers)
            jl.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
        return {{"layers", jl},
                {"epochs_run", epochs_run},
                {"best_epoch", best_epoch},
                {"validation_loss", validation_loss}};
    }

    static MlpModel from_json(const nlohmann::json& j) {
        MlpModel m;
        for (const auto& jl : j.at("layers")) {
            DenseLayer l{jl.at("in").get<std::size_t>(), jl.at("out").get<std::size_t>(),
                         jl.at("weights").get<std::vector<double>>(), jl.at("bias").get<std::vector<double>>()};
            if (l.weights.size() != l.in * l.out || l.bias.size() != l.out) throw DataError("mlp layer shape mismatch");
            if (!m.layers.empty() && m.layers.back().out != l.in) throw DataError("mlp layers do not chain");
            m.layers.push_back(std::move(l));
        }
        if (m.layers.empty() || m.layers.back().out != kNumClasses) throw DataError("mlp output layer must have 3 units");
        m.epochs_run = j.at("epochs_run").get<std::size_t>();
        m.best_epoch = j.at("best_epoch").get<std::size_t>();
        m.validation_loss = j.at("validation_loss").get<std::vector<double>>();
        return m;
    }
};

// Gradients with the same shapes as the model's layers.
struct MlpGradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
    double loss = 0.0;  // mean cross-entropy of the batch

    explicit MlpGradient(const MlpModel& m) {
        for (const auto& l : m.layers) {
            weights.emplace_back(l.weights.size(), 0.0);
            bias.emplace_back(l.bias.size(), 0.0);
        }
    }

    void clear() {
        for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
        for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
        loss = 0.0;
    }
};

// Accumulates the mean cross-entropy gradient over `rows` of x into g (cleared first).
inline void mlp_gradient(const MlpModel& m, const FeatureMatrix& x, std::span<const std::size_t> rows,
                         std::span<const Label> y, MlpGradient& g) {
    if (rows.empty()) throw DataError("mlp_gradient: empty batch");
    if (x.cols() != m.dim()) throw DataError("mlp_gradient: feature dimension mismatch");
    g.clear();
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    std::vector<std::vector<double>> act;
    std::vector<double> delta, prev_delta;
    const std::size_t L = m.layers.size();
    for (std::size_t r : rows) {
        const auto xr = x.row(r);
        m.forward(xr, act);
        ClassScores p;
        std::copy(act.back().begin(), act.back().end(), p.begin());
        softmax_in_place(p);
        const std::size_t t = index_of(y[r]);
        g.loss -= std::log(std::max(p[t], std::numeric_limits<double>::min())) * inv_b;
        delta.assign(kNumClasses, 0.0);
        for (std::size_t c = 0; c < kNumClasses; ++c) delta[c] = (p[c] - (c == t ? 1.0 : 0.0)) * inv_b;

        for (std::size_t l = L; l-- > 0;) {
            const auto& layer = m.layers[l];
            auto& gw = g.weights[l];
            auto& gb = g.bias[l];
            for (std::size_t j = 0; j < layer.out; ++j) gb[j] += delta[j];
            if (l == 0) {
                xr.for_each_nonzero([&](std::size_t i, double v) {
                    double* row = gw.data() + i * layer.out;
                    for (std::size_t j = 0; j < layer.out; ++j) row[j] += v * delta[j];
                });
                break;
            }
            const auto& a_prev = act[l - 1];
            prev_delta.assign(layer.in, 0.0);
            for (std::size_t i = 0; i < layer.in; ++i) {
                const double v = a_prev[i];
                const auto w = layer.fan_out(i);
                double back = 0.0;
                double* row = gw.data() + i * layer.out;
                for (std::size_t j = 0; j < layer.out; ++j) {
                    row[j] += v * delta[j];
                    back += w[j] * delta[j];
                }
                // ReLU derivative; post-activation is zero exactly where z <= 0.
                prev_delta[i] = v > 0.0 ? back : 0.0;
            }
            std::swap(delta, prev_delta);
        }
    }
}

inline MlpGradient mlp_gradient(const MlpModel& m, const FeatureMatrix& x, std::span<const Label> y) {
    if (x.rows() != y.size()) throw DataError("mlp_gradient: row/label count mismatch");
    std::vector<std::size_t> rows(x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    MlpGradient g(m);
    mlp_gradient(m, x, rows, y, g);
    return g;
}

inline double mlp_mean_loss(const MlpModel& m, const FeatureMatrix& x, std::span<const std::size_t> rows,
                            std::span<const Label> y) {
    std::vector<std::vector<double>> act;
    double loss = 0.0;
    for (std::size_t r : rows) {
        m.forward(x.row(r), act);
        ClassScores p;
        std::copy(act.back().begin(), act.back().end(), p.begin());
        softmax_in_place(p);
        loss -= std::log(std::max(p[index_of(y[r])], std::numeric_limits<double>::min()));
    }
    return loss / static_cast<double>(rows.size());
}

namespace detail {

// Stratified holdout: per label, round(fraction * count) rows, always leaving
// at least one training row of that label.
inline void stratified_holdout(std::span<const Label> y, double fraction, Rng& rng, std::vector<std::size_t>& train,
                               std::vector<std::size_t>& val) {
    std::array<std::vector<std::size_t>, kNumClasses> by_label;
    for (std::size_t i = 0; i < y.size(); ++i) by_label[index_of(y[i])].push_back(i);
    for (auto& idx : by_label) {
        rng.shuffle(idx);
        std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        if (!idx.empty()) n_val = std::min(n_val, idx.size() - 1);
        val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
}

class Adam {
public:
    Adam(const MlpModel& m, const MlpParams& p) : p_(p), mw_(m), vw_(m) {}

    void step(MlpModel& m, const MlpGradient& g) {
        ++t_;
        const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
        const double lr = p_.learning_rate * std::sqrt(c2) / c1;
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            update(m.layers[l].weights, g.weights[l], mw_.weights[l], vw_.weights[l], lr);
            update(m.layers[l].bias, g.bias[l], mw_.bias[l], vw_.bias[l], lr);
        }
    }

private:
    void update(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v,
                double lr) const {
        const double b1 = p_.beta1, b2 = p_.beta2, eps = p_.epsilon;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
        }
    }

    MlpParams p_;
    MlpGradient mw_;
    MlpGradient vw_;
    std::size_t t_ = 0;
};

} // namespace detail

inline MlpModel fit_mlp(const FeatureMatrix& x, std::span<const Label> y, const MlpParams& p, std::uint64_t seed) {
    MlpModel m = MlpModel::glorot(x.cols(), p.hidden, derive_seed(seed, 0));
    Rng split_rng(derive_seed(seed, 1));
    Rng order_rng(derive_seed(seed, 2));

    std::vector<std::size_t> train, val;
    if (p.early_stopping && p.validation_fraction > 0.0) {
        detail::stratified_holdout(y, p.validation_fraction, split_rng, train, val);
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) train.push_back(i);
    }

    detail::Adam adam(m, p);
    MlpGradient g(m);
    MlpModel best = m;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t epoch = 0;
    for (; epoch < p.max_epochs; ++epoch) {
        order_rng.shuffle(train);
        for (std::size_t b = 0; b < train.size(); b += p.batch_size) {
            const std::size_t e = std::min(train.size(), b + p.batch_size);
            mlp_gradient(m, x, std::span<const std::size_t>(train).subspan(b, e - b), y, g);
            adam.step(m, g);
        }
        if (val.empty()) continue;
        const double vl = mlp_mean_loss(m, x, val, y);
        m.validation_loss.push_back(vl);
        if (vl < best_loss) {
            best_loss = vl;
            best.layers = m.layers;
            best.best_epoch = epoch;
        } else if (epoch - best.best_epoch >= p.patience) {
            ++epoch;
            break;
        }
    }
    if (val.empty()) {
        m.epochs_run = epoch;
        m.best_epoch = epoch == 0 ? 0 : epoch - 1;
        return m;
    }
    best.epochs_run = epoch;
    best.validation_loss = std::move(m.validation_loss);
    return best;
}

} // namespace qroute
