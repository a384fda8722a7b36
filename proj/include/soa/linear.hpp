// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "soa/error.hpp"
#include "soa/features.hpp"
#include "soa/random.hpp"

namespace soa {

enum class Loss : std::uint8_t { kHinge, kLogistic };

inline std::string_view loss_name(Loss l) { return l == Loss::kHinge ? "hinge" : "logistic"; }

inline Loss loss_from_name(std::string_view s) {
    if (s == "hinge") return Loss::kHinge;
    if (s == "logistic") return Loss::kLogistic;
    throw ValidationError("unknown loss '" + std::string(s) + "'");
}

struct LinearConfig {
    Loss loss = Loss::kHinge;
    double lambda = 1e-3;
    int epochs = 20;
    std::uint64_t seed = 0;
    /// Initial step for the logistic schedule eta0 / (1 + lambda * eta0 * t).
    double logistic_eta0 = 1.0;

    void validate() const {
        if (!(lambda > 0.0)) throw ValidationError("linear: lambda must be > 0");
        if (epochs < 1) throw ValidationError("linear: epochs must be >= 1");
        if (!(logistic_eta0 > 0.0)) throw ValidationError("linear: logistic_eta0 must be > 0");
    }

    /// Record the full training objective after every epoch.
    bool track_objective = false;

    /// Grid ordering: loss, then lambda, then epochs.
    friend bool operator<(const LinearConfig& a, const LinearConfig& b) {
        return std::tie(a.loss, a.lambda, a.epochs) < std::tie(b.loss, b.lambda, b.epochs);
    }
    friend bool operator==(const LinearConfig& a, const LinearConfig& b) {
        return std::tie(a.loss, a.lambda, a.epochs) == std::tie(b.loss, b.lambda, b.epochs);
    }
};

/// Linear scorer over the full feature space. The bias is the coefficient of
/// an implicit constant feature and is regularized with the weights.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    LinearConfig config;
    std::string label_name;
    /// Training objective after each epoch, when tracked.
    std::vector<double> objective_trace;
};

struct Prediction {
    bool label = false;
    double score = 0.0;
    /// sigmoid(score), only for logistic-loss models.
    std::optional<double> probability;
};

inline double sigmoid(double s) {
    if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

/// log(1 + exp(-m)) without overflow.
inline double logistic_loss(double margin) {
    return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

inline double hinge_loss(double margin) { return margin < 1.0 ? 1.0 - margin : 0.0; }

inline double dot(std::span<const double> w, const FeatureVector& x) {
    double s = 0.0;
    for (const auto& e : x.sparse) s += w[e.index] * e.weight;
    const double* tail = w.data() + x.sparse_dim;
    for (std::size_t j = 0; j < x.dense.size(); ++j) s += tail[j] * x.dense[j];
    return s;
}

inline double decision_score(const LinearModel& m, const FeatureVector& x) {
    if (m.weights.size() != x.total_dim()) {
        throw ValidationError("predict: dimension mismatch (expected " + std::to_string(m.weights.size()) +
                              ", got " + std::to_string(x.total_dim()) + ")");
    }
    return dot(m.weights, x) + m.bias;
}

inline Prediction predict(const LinearModel& m, const FeatureVector& x) {
    Prediction p;
    p.score = decision_score(m, x);
    p.label = p.score > 0.0;
    if (m.config.loss == Loss::kLogistic) p.probability = sigmoid(p.score);
    return p;
}

/// lambda/2 (|w|^2 + b^2) + mean loss, with targets in {0, 1} mapped to -1/+1.
inline double objective(const LinearModel& m, std::span<const FeatureVector> X, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double margin = (y[i] ? 1.0 : -1.0) * decision_score(m, X[i]);
        total += m.config.loss == Loss::kHinge ? hinge_loss(margin) : logistic_loss(margin);
    }
    double norm2 = m.bias * m.bias;
    for (double w : m.weights) norm2 += w * w;
    return 0.5 * m.config.lambda * norm2 + total / static_cast<double>(X.size());
}

/// Gradient of the logistic objective: weights first, bias last.
inline std::vector<double> logistic_gradient(const LinearModel& m, std::span<const FeatureVector> X,
                                             std::span<const int> y) {
    const std::size_t dim = m.weights.size();
    std::vector<double> g(dim + 1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double yi = y[i] ? 1.0 : -1.0;
        const double coef = -yi * sigmoid(-yi * decision_score(m, X[i])) * inv_n;
        for (const auto& e : X[i].sparse) g[e.index] += coef * e.weight;
        for (std::size_t j = 0; j < X[i].dense.size(); ++j) g[X[i].sparse_dim + j] += coef * X[i].dense[j];
        g[dim] += coef;
    }
    for (std::size_t j = 0; j < dim; ++j) g[j] += m.config.lambda * m.weights[j];
    g[dim] += m.config.lambda * m.bias;
    return g;
}

namespace detail {

inline void check_binary_targets(std::span<const int> y) {
    std::size_t pos = 0;
    for (int v : y) pos += v ? 1 : 0;
    if (pos == 0 || pos == y.size()) throw DegenerateError("degenerate label distribution");
}

/// Weight vector stored as scale * v so that shrinkage is O(1) per step.
class ScaledVector {
public:
    explicit ScaledVector(std::size_t n) : v_(n, 0.0) {}

    double dot(const FeatureVector& x) const {
        double s = v_.back();  // constant feature
        for (const auto& e : x.sparse) s += v_[e.index] * e.weight;
        const double* tail = v_.data() + x.sparse_dim;
        for (std::size_t j = 0; j < x.dense.size(); ++j) s += tail[j] * x.dense[j];
        return scale_ * s;
    }

    void shrink(double factor) {
        if (factor <= 0.0) {
            std::fill(v_.begin(), v_.end(), 0.0);
            scale_ = 1.0;
            norm2_ = 0.0;
            return;
        }
        scale_ *= factor;
        if (scale_ < 1e-9) renormalize();
    }

    /// w += c * x (including the constant feature).
    void add(const FeatureVector& x, double c) {
        const double cv = c / scale_;
        auto bump = [&](std::size_t j, double xj) {
            const double d = cv * xj;
            norm2_ += 2.0 * v_[j] * d + d * d;
            v_[j] += d;
        };
        for (const auto& e : x.sparse) bump(e.index, e.weight);
        for (std::size_t j = 0; j < x.dense.size(); ++j) bump(x.sparse_dim + j, x.dense[j]);
        bump(v_.size() - 1, 1.0);
    }

    double norm() const { return scale_ * std::sqrt(std::max(norm2_, 0.0)); }

    void renormalize() {
        norm2_ = 0.0;
        for (double& x : v_) {
            x *= scale_;
            norm2_ += x * x;
        }
        scale_ = 1.0;
    }

    std::vector<double> weights() const {
        std::vector<double> w(v_.begin(), v_.end() - 1);
        for (double& x : w) x *= scale_;
        return w;
    }
    double bias() const { return scale_ * v_.back(); }

private:
    std::vector<double> v_;
    double scale_ = 1.0;
    double norm2_ = 0.0;
};

}  // namespace detail

/// SGD on lambda/2 |w|^2 + mean loss. Hinge uses the Pegasos step
/// 1/(lambda (t+1)) with projection onto the ball of radius 1/sqrt(lambda);
/// logistic uses eta0 / (1 + lambda eta0 t). Examples are reshuffled every
/// epoch from the configured seed.
inline LinearModel train_linear(std::span<const FeatureVector> X, std::span<const int> y, const LinearConfig& config,
                                std::string label_name = {}) {
    config.validate();
    if (X.size() != y.size()) throw ValidationError("train: X and y differ in length");
    if (X.empty()) throw DegenerateError("degenerate label distribution (no examples)");
    detail::check_binary_targets(y);
    const std::size_t dim = X[0].total_dim();
    for (const auto& x : X) {
        if (x.total_dim() != dim) throw ValidationError("train: feature vectors differ in dimension");
    }

    LinearModel model;
    model.config = config;
    model.label_name = std::move(label_name);

    detail::ScaledVector w(dim + 1);
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed);
    const double radius = 1.0 / std::sqrt(config.lambda);
    std::uint64_t t = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), rng);
        for (std::size_t i : order) {
            const double yi = y[i] ? 1.0 : -1.0;
            const double margin = yi * w.dot(X[i]);
            if (config.loss == Loss::kHinge) {
                const double eta = 1.0 / (config.lambda * static_cast<double>(t + 1));
                w.shrink(1.0 - eta * config.lambda);
                if (margin < 1.0) w.add(X[i], eta * yi);
                const double n = w.norm();
                if (n > radius) w.shrink(radius / n);
            } else {
                const double eta =
                    config.logistic_eta0 / (1.0 + config.lambda * config.logistic_eta0 * static_cast<double>(t));
                w.shrink(1.0 - eta * config.lambda);
                w.add(X[i], eta * yi * sigmoid(-margin));
            }
            ++t;
        }
        w.renormalize();
        if (config.track_objective) {
            model.weights = w.weights();
            model.bias = w.bias();
            model.objective_trace.push_back(objective(model, X, y));
        }
    }
    model.weights = w.weights();
    model.bias = w.bias();
    return model;
}

/// Feature-blind baseline predicting positives at the training prior.
struct DummyModel {
    double positive_rate = 0.0;
    std::uint64_t seed = 0;
};

inline DummyModel train_dummy(std::span<const int> y, std::uint64_t seed) {
    if (y.empty()) throw ValidationError("dummy: empty target vector");
    std::size_t pos = 0;
    for (int v : y) pos += v ? 1 : 0;
    return {static_cast<double>(pos) / static_cast<double>(y.size()), seed};
}

/// n independent draws; the same model and n always give the same sequence.
inline std::vector<int> predict_dummy(const DummyModel& m, std::size_t n) {
    Rng rng(m.seed);
    std::vector<int> out(n);
    for (auto& v : out) v = bernoulli(rng, m.positive_rate) ? 1 : 0;
    return out;
}

}  // namespace soa
