// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "soa/linear.hpp"

using Catch::Approx;

namespace {

soa::FeatureVector dense(std::vector<double> v) {
    soa::FeatureVector x;
    x.dense = std::move(v);
    return x;
}

/// Two Gaussian blobs around (+2, +2) and (-2, -2).
void blobs(std::size_t n, std::uint64_t seed, std::vector<soa::FeatureVector>& X, std::vector<int>& y) {
    soa::Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double c = label ? 2.0 : -2.0;
        X.push_back(dense({c + noise(rng), c + noise(rng)}));
        y.push_back(label);
    }
}

/// Random instance with a sparse block of width 6 and a dense tail of 3.
soa::FeatureVector random_mixed(soa::Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    soa::FeatureVector x;
    x.sparse_dim = 6;
    for (std::uint32_t j = 0; j < 6; ++j) {
        if (soa::bernoulli(rng, 0.5)) x.sparse.push_back({j, u(rng)});
    }
    x.dense = {u(rng), u(rng), u(rng)};
    return x;
}

double vector_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("loss names round-trip", "[linear]") {
    CHECK(soa::loss_from_name("hinge") == soa::Loss::kHinge);
    CHECK(soa::loss_name(soa::Loss::kLogistic) == "logistic");
    CHECK_THROWS_AS(soa::loss_from_name("squared"), soa::ValidationError);
}

TEST_CASE("separable blobs are classified perfectly by both losses", "[linear]") {
    std::vector<soa::FeatureVector> X;
    std::vector<int> y;
    blobs(200, 3, X, y);
    for (auto loss : {soa::Loss::kHinge, soa::Loss::kLogistic}) {
        soa::LinearConfig cfg;
        cfg.loss = loss;
        cfg.lambda = 1e-3;
        cfg.epochs = 10;
        cfg.seed = 5;
        const auto m = soa::train_linear(X, y, cfg, "blob");
        CHECK(m.label_name == "blob");
        std::size_t correct = 0;
        for (std::size_t i = 0; i < X.size(); ++i) correct += soa::predict(m, X[i]).label == (y[i] == 1) ? 1 : 0;
        CHECK(correct == X.size());
        CHECK(soa::predict(m, X[0]).probability.has_value() == (loss == soa::Loss::kLogistic));
    }
}

TEST_CASE("degenerate targets are rejected", "[linear]") {
    std::vector<soa::FeatureVector> X{dense({1.0}), dense({2.0})};
    std::vector<int> zeros{0, 0}, ones{1, 1};
    CHECK_THROWS_AS(soa::train_linear(X, zeros, {}), soa::DegenerateError);
    CHECK_THROWS_AS(soa::train_linear(X, ones, {}), soa::DegenerateError);
    CHECK_THROWS_AS(soa::train_linear({}, {}, {}), soa::DegenerateError);
    std::vector<int> short_y{1};
    CHECK_THROWS_AS(soa::train_linear(X, short_y, {}), soa::ValidationError);
    soa::LinearConfig bad;
    bad.lambda = 0.0;
    std::vector<int> mixed{0, 1};
    CHECK_THROWS_AS(soa::train_linear(X, mixed, bad), soa::ValidationError);
}

TEST_CASE("training is deterministic for a seed", "[linear]") {
    std::vector<soa::FeatureVector> X;
    std::vector<int> y;
    blobs(100, 8, X, y);
    soa::LinearConfig cfg;
    cfg.seed = 12;
    const auto a = soa::train_linear(X, y, cfg);
    const auto b = soa::train_linear(X, y, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    cfg.seed = 13;
    CHECK(soa::train_linear(X, y, cfg).weights != a.weights);
}

TEST_CASE("a zero score predicts the negative class", "[linear]") {
    soa::LinearModel m;
    m.weights = {0.0, 0.0};
    const auto p = soa::predict(m, dense({3.0, -1.0}));
    CHECK(p.score == 0.0);
    CHECK_FALSE(p.label);
    CHECK_THROWS_AS(soa::predict(m, dense({1.0})), soa::ValidationError);
}

TEST_CASE("logistic gradient matches central differences", "[linear][property]") {
    soa::Rng rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<soa::FeatureVector> X;
        std::vector<int> y;
        const auto n = 2 + soa::uniform_index(rng, 8);
        for (std::size_t i = 0; i < n; ++i) {
            X.push_back(random_mixed(rng));
            y.push_back(soa::bernoulli(rng, 0.5) ? 1 : 0);
        }
        soa::LinearModel m;
        m.config.loss = soa::Loss::kLogistic;
        m.config.lambda = 0.01 + 0.5 * (u(rng) + 1.0);
        for (int j = 0; j < 9; ++j) m.weights.push_back(u(rng));
        m.bias = u(rng);

        const auto g = soa::logistic_gradient(m, X, y);
        std::vector<double> fd(g.size());
        const double h = 1e-5;
        for (std::size_t j = 0; j < g.size(); ++j) {
            double& param = j < m.weights.size() ? m.weights[j] : m.bias;
            const double saved = param;
            param = saved + h;
            const double up = soa::objective(m, X, y);
            param = saved - h;
            const double down = soa::objective(m, X, y);
            param = saved;
            fd[j] = (up - down) / (2 * h);
        }
        std::vector<double> diff(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) diff[j] = g[j] - fd[j];
        CHECK(vector_norm(diff) / std::max(vector_norm(g), vector_norm(fd)) < 1e-5);
    }
}

TEST_CASE("hinge objective decreases over training", "[linear][property]") {
    std::vector<soa::FeatureVector> X;
    std::vector<int> y;
    blobs(300, 21, X, y);
    // Overlapping labels make the problem non-separable.
    for (std::size_t i = 0; i < X.size(); i += 7) y[i] = 1 - y[i];
    soa::LinearConfig cfg;
    cfg.lambda = 1e-2;
    cfg.epochs = 30;
    cfg.track_objective = true;
    const auto m = soa::train_linear(X, y, cfg);
    REQUIRE(m.objective_trace.size() == 30);
    CHECK(m.objective_trace.back() <= m.objective_trace.front());
    soa::LinearModel zero = m;
    std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
    zero.bias = 0.0;
    CHECK(m.objective_trace.back() < soa::objective(zero, X, y));
    CHECK(soa::objective(m, X, y) == Approx(m.objective_trace.back()));
}

TEST_CASE("Pegasos iterates stay in the feasible ball", "[linear][property]") {
    std::vector<soa::FeatureVector> X;
    std::vector<int> y;
    blobs(100, 4, X, y);
    for (double lambda : {1e-4, 1e-2, 1.0}) {
        soa::LinearConfig cfg;
        cfg.lambda = lambda;
        cfg.epochs = 5;
        const auto m = soa::train_linear(X, y, cfg);
        double n2 = m.bias * m.bias;
        for (double w : m.weights) n2 += w * w;
        CHECK(std::sqrt(n2) <= 1.0 / std::sqrt(lambda) * (1 + 1e-9));
    }
}

TEST_CASE("sparse and dense feature blocks share one weight vector", "[linear]") {
    soa::FeatureVector x;
    x.sparse_dim = 3;
    x.sparse = {{0, 1.0}, {2, 0.5}};
    x.dense = {2.0};
    soa::LinearModel m;
    m.weights = {1.0, 100.0, 2.0, -0.25};
    m.bias = 0.1;
    // 1 + 0.5 * 2 - 0.25 * 2 + 0.1
    CHECK(soa::decision_score(m, x) == Approx(1.6));
}

TEST_CASE("dummy baseline draws at the training prior", "[linear]") {
    std::vector<int> y(1000, 0);
    for (std::size_t i = 0; i < 300; ++i) y[i] = 1;
    const auto d = soa::train_dummy(y, 77);
    CHECK(d.positive_rate == Approx(0.3));
    const auto draws = soa::predict_dummy(d, 100000);
    double rate = 0;
    for (int v : draws) rate += v;
    CHECK(rate / 100000.0 == Approx(0.30).margin(0.01));
    CHECK(soa::predict_dummy(d, 50) == soa::predict_dummy(d, 50));
    CHECK_THROWS_AS(soa::train_dummy({}, 1), soa::ValidationError);
}
