// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soa/eval.hpp"
#include "soa/labels.hpp"
#include "soa/linear.hpp"

namespace soa {

struct OvrConfig {
    std::vector<LinearConfig> grid;
    int folds = 5;
    std::uint64_t seed = 0;
    /// A label needs at least this many positives (and negatives) to train.
    std::size_t min_positives = 2;
};

/// Outcome of one label's model selection and training.
struct LabelTraining {
    std::string label;
    bool trained = false;
    std::string skip_reason;
    std::size_t positives = 0;
    std::size_t examples = 0;
    GridResult grid;
};

/// Nine one-vs-rest SOA models plus the binary intensity model. Labels whose
/// training data was degenerate have no model and a report entry instead.
struct EnsembleModel {
    std::array<std::optional<LinearModel>, kNumSubjects> soa_models;
    std::optional<LinearModel> intensity_model;
    std::vector<LabelTraining> report;
};

struct EnsemblePrediction {
    SoaLabels soa;
    std::array<double, kNumSubjects> soa_scores{};
    std::array<bool, kNumSubjects> soa_available{};
    bool intensity = false;
    double intensity_score = 0.0;
    bool intensity_available = false;
};

/// Grid search with stratified k-fold CV, then a refit on all rows with the
/// winning configuration. Returns a skipped entry instead of throwing when
/// the label has too few positives or negatives.
inline LabelTraining train_label(std::span<const FeatureVector> X, std::span<const int> y, const std::string& label,
                                 const OvrConfig& config, SelectionMetric metric, std::optional<LinearModel>& out) {
    LabelTraining t;
    t.label = label;
    t.examples = y.size();
    for (int v : y) t.positives += v ? 1 : 0;
    const std::size_t negatives = y.size() - t.positives;
    if (t.positives < config.min_positives || negatives < config.min_positives) {
        t.skip_reason = "too few positive or negative examples (" + std::to_string(t.positives) + " positive of " +
                        std::to_string(y.size()) + ")";
        return t;
    }
    const std::uint64_t seed = derive_seed(config.seed, label);
    auto grid = config.grid;
    for (auto& g : grid) g.seed = seed;
    try {
        t.grid = grid_search(X, y, grid, config.folds, metric, seed);
        out = train_linear(X, y, t.grid.best, label);
        t.trained = true;
    } catch (const DegenerateError& e) {
        t.skip_reason = e.what();
        out.reset();
    }
    return t;
}

/// One independent binary model per SOA (positives are the posts carrying the
/// label) plus the level-2-vs-rest intensity model.
inline EnsembleModel train_ovr(std::span<const FeatureVector> X, std::span<const SoaLabels> soa,
                               std::span<const IntensityLevel> intensity, const OvrConfig& config) {
    if (X.size() != soa.size() || X.size() != intensity.size()) {
        throw ValidationError("train_ovr: features and labels differ in length");
    }
    if (config.grid.empty()) throw ValidationError("train_ovr: empty hyperparameter grid");
    EnsembleModel model;
    std::vector<int> y(X.size());
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        for (std::size_t i = 0; i < X.size(); ++i) y[i] = soa[i][s] ? 1 : 0;
        model.report.push_back(train_label(X, y, std::string(kSubjectNames[s]), config, SelectionMetric::kPositiveF1,
                                           model.soa_models[s]));
    }
    for (std::size_t i = 0; i < X.size(); ++i) y[i] = combine_intensity_labels(intensity[i]) ? 1 : 0;
    model.report.push_back(train_label(X, y, std::string(kIntensityName), config, SelectionMetric::kMacroF1,
                                       model.intensity_model));
    return model;
}

inline EnsemblePrediction predict(const EnsembleModel& model, const FeatureVector& x) {
    EnsemblePrediction p;
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        if (!model.soa_models[s]) continue;
        const Prediction r = predict(*model.soa_models[s], x);
        p.soa[s] = r.label;
        p.soa_scores[s] = r.score;
        p.soa_available[s] = true;
    }
    if (model.intensity_model) {
        const Prediction r = predict(*model.intensity_model, x);
        p.intensity = r.label;
        p.intensity_score = r.score;
        p.intensity_available = true;
    }
    return p;
}

}  // namespace soa
