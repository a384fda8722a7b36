// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soa/corpus.hpp"
#include "soa/ensemble.hpp"
#include "soa/eval.hpp"
#include "soa/features.hpp"

namespace soa {

struct TrainingConfig {
    FeatureConfig features;
    OvrConfig ovr;
    double test_frac = 0.2;
    /// Master seed; the component seeds below are derived from it.
    std::uint64_t seed = 0;

    std::uint64_t split_seed() const { return derive_seed(seed, "split"); }
    std::uint64_t dummy_seed(std::string_view label) const { return derive_seed(derive_seed(seed, "dummy"), label); }

    /// Copy with the LDA and classifier seeds derived from the master seed.
    TrainingConfig resolved() const {
        TrainingConfig c = *this;
        c.features.lda.seed = derive_seed(seed, "lda");
        c.ovr.seed = derive_seed(seed, "ovr");
        return c;
    }
};

struct TrainedPipeline {
    FeatureBundle bundle;
    EnsembleModel ensemble;
    FeatureFitReport feature_report;
};

inline std::vector<FeatureVector> featurize(const FeatureBundle& bundle, std::span<const std::string> texts) {
    std::vector<FeatureVector> X;
    X.reserve(texts.size());
    for (const auto& t : texts) X.push_back(assemble_features(t, bundle));
    return X;
}

inline std::vector<std::string> texts_of(std::span<const AnnotatedPost> posts) {
    std::vector<std::string> out;
    out.reserve(posts.size());
    for (const auto& p : posts) out.push_back(p.post.text());
    return out;
}

inline std::vector<std::string> texts_of(std::span<const Post> posts) {
    std::vector<std::string> out;
    out.reserve(posts.size());
    for (const auto& p : posts) out.push_back(p.text());
    return out;
}

/// Fits features on the training posts, then the OvR ensemble.
inline TrainedPipeline fit_pipeline(std::span<const AnnotatedPost> train, const SentimentLexicon& lexicon,
                                    const TrainingConfig& config) {
    if (train.empty()) throw DataError("train: no annotated posts");
    const TrainingConfig cfg = config.resolved();
    TrainedPipeline p;
    const auto texts = texts_of(train);
    p.bundle = fit_features(texts, lexicon, cfg.features, &p.feature_report);
    const auto X = featurize(p.bundle, texts);
    std::vector<SoaLabels> soa;
    std::vector<IntensityLevel> intensity;
    for (const auto& a : train) {
        soa.push_back(a.soa);
        intensity.push_back(a.intensity);
    }
    p.ensemble = train_ovr(X, soa, intensity, cfg.ovr);
    if (std::none_of(p.ensemble.report.begin(), p.ensemble.report.end(), [](const auto& t) { return t.trained; })) {
        throw DegenerateError("train: no label has enough positive and negative examples to train");
    }
    return p;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct LabelResult {
    std::string label;
    bool trained = false;
    std::string skip_reason;
    ClassMetrics metrics;
    /// Positive fraction among the evaluated posts.
    double ratio = 0.0;
    /// Best mean cross-validation score from model selection.
    std::optional<double> cv_score;
};

struct MetricBlock {
    /// Nine SOA rows followed by the intensity row.
    std::vector<LabelResult> labels;
    /// Unweighted mean over the SOA labels that trained.
    ClassMetrics macro;
    std::vector<std::string> skipped;

    const LabelResult* find(std::string_view name) const {
        for (const auto& l : labels) {
            if (l.label == name) return &l;
        }
        return nullptr;
    }
};

struct EvalReport {
    std::string protocol;
    MetricBlock model;
    MetricBlock baseline;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<int> label_column(std::span<const AnnotatedPost> posts, std::size_t s) {
    std::vector<int> y;
    y.reserve(posts.size());
    for (const auto& p : posts) y.push_back(s < kNumSubjects ? p.soa[s] : combine_intensity_labels(p.intensity));
    return y;
}

inline double positive_fraction(std::span<const int> y) {
    std::size_t pos = 0;
    for (int v : y) pos += v ? 1 : 0;
    return y.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(y.size());
}

inline std::string label_name(std::size_t s) {
    return s < kNumSubjects ? std::string(kSubjectNames[s]) : std::string(kIntensityName);
}

inline void finish_block(MetricBlock& block) {
    std::vector<ClassMetrics> parts;
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        if (block.labels[s].trained) {
            parts.push_back(block.labels[s].metrics);
        } else {
            block.skipped.push_back(block.labels[s].label);
        }
    }
    block.macro = macro_average(parts);
}

}  // namespace detail

/// Scores a trained pipeline on held-out posts, alongside a dummy baseline
/// fitted to the training labels. Intensity rows use the binary macro average.
inline EvalReport evaluate_pipeline(const TrainedPipeline& pipeline, std::span<const AnnotatedPost> train,
                                    std::span<const AnnotatedPost> test, const TrainingConfig& config,
                                    std::string protocol) {
    if (test.empty()) throw DataError(protocol + ": empty evaluation set");
    EvalReport report;
    report.protocol = std::move(protocol);
    report.seed = config.seed;
    report.n_train = train.size();
    report.n_test = test.size();

    const auto X = featurize(pipeline.bundle, texts_of(test));
    std::vector<EnsemblePrediction> preds;
    preds.reserve(X.size());
    for (const auto& x : X) preds.push_back(predict(pipeline.ensemble, x));

    for (std::size_t s = 0; s <= kNumSubjects; ++s) {
        const std::string name = detail::label_name(s);
        const auto y_true = detail::label_column(test, s);
        const auto y_train = detail::label_column(train, s);
        const bool intensity = s == kNumSubjects;
        const LabelTraining& t = pipeline.ensemble.report[s];

        LabelResult model{name, t.trained, t.skip_reason, {}, detail::positive_fraction(y_true), std::nullopt};
        if (t.trained) {
            std::vector<int> y_pred;
            y_pred.reserve(preds.size());
            for (const auto& p : preds) y_pred.push_back(intensity ? p.intensity : p.soa[s]);
            model.metrics = intensity ? macro_prf(y_true, y_pred) : prf(y_true, y_pred);
            model.cv_score = t.grid.best_score;
        }
        report.model.labels.push_back(std::move(model));

        const auto dummy = train_dummy(y_train, config.dummy_seed(name));
        const auto y_dummy = predict_dummy(dummy, test.size());
        LabelResult base{name, true, {}, {}, detail::positive_fraction(y_true), std::nullopt};
        base.metrics = intensity ? macro_prf(y_true, y_dummy) : prf(y_true, y_dummy);
        report.baseline.labels.push_back(std::move(base));
    }
    detail::finish_block(report.model);
    // The baseline macro covers the same labels as the model's.
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        report.baseline.labels[s].trained = report.model.labels[s].trained;
    }
    detail::finish_block(report.baseline);
    for (const auto& w : pipeline.feature_report.warnings) report.warnings.push_back(w);
    return report;
}

struct ProtocolRun {
    SplitPlan plan;
    TrainedPipeline pipeline;
    EvalReport report;
};

/// Stratum of a post: its rarest SOA label by dataset prior, or kNumSubjects
/// when it carries none.
inline std::vector<int> rarest_label_strata(std::span<const AnnotatedPost> posts) {
    std::array<std::size_t, kNumSubjects> counts{};
    for (const auto& p : posts) {
        for (std::size_t s = 0; s < kNumSubjects; ++s) counts[s] += p.soa[s] ? 1 : 0;
    }
    std::vector<int> strata;
    strata.reserve(posts.size());
    for (const auto& p : posts) {
        int best = static_cast<int>(kNumSubjects);
        for (std::size_t s = 0; s < kNumSubjects; ++s) {
            if (p.soa[s] && (best == static_cast<int>(kNumSubjects) || counts[s] < counts[static_cast<std::size_t>(best)]))
                best = static_cast<int>(s);
        }
        strata.push_back(best);
    }
    return strata;
}

/// 80/20 stratified split, model selection by CV on the training part, then
/// evaluation on the test part.
inline ProtocolRun main_split(std::span<const AnnotatedPost> posts, const SentimentLexicon& lexicon,
                              const TrainingConfig& config) {
    ProtocolRun run;
    const auto strata = rarest_label_strata(posts);
    run.plan = stratified_split(strata, config.test_frac, config.split_seed());
    const auto train = gather(posts, std::span<const std::size_t>(run.plan.train));
    const auto test = gather(posts, std::span<const std::size_t>(run.plan.test));
    run.pipeline = fit_pipeline(train, lexicon, config);
    run.report = evaluate_pipeline(run.pipeline, train, test, config, "main");
    run.report.warnings.insert(run.report.warnings.end(), run.plan.warnings.begin(), run.plan.warnings.end());
    return run;
}

/// Trains on every month strictly before the cutoff and tests on the cutoff
/// month. Later months are ignored.
inline ProtocolRun last_month_holdout(std::span<const AnnotatedPost> posts, const PeriodKey& cutoff,
                                      const SentimentLexicon& lexicon, const TrainingConfig& config) {
    if (cutoff.granularity != Granularity::kMonth) throw ValidationError("holdout: cutoff must be a month");
    ProtocolRun run;
    run.plan.seed = config.seed;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const PeriodKey m = period_of(posts[i].post.created_utc, Granularity::kMonth);
        if (m < cutoff) run.plan.train.push_back(i);
        if (m == cutoff) run.plan.test.push_back(i);
    }
    if (run.plan.train.empty()) {
        throw DataError("holdout: no posts before cutoff month " + cutoff.to_string());
    }
    if (run.plan.test.empty()) throw DataError("holdout: cutoff month " + cutoff.to_string() + " has no posts");
    const auto train = gather(posts, std::span<const std::size_t>(run.plan.train));
    const auto test = gather(posts, std::span<const std::size_t>(run.plan.test));
    run.pipeline = fit_pipeline(train, lexicon, config);
    run.report = evaluate_pipeline(run.pipeline, train, test, config, "last_month_holdout");
    return run;
}

inline bool in_window(std::int64_t created_utc, std::chrono::sys_days from, std::chrono::sys_days to) {
    const auto d = utc_day(created_utc);
    return d >= from && d <= to;
}

/// Trains on all of `train` and tests on the posts of `future` dated within
/// [from, to] (inclusive days).
inline ProtocolRun future_window(std::span<const AnnotatedPost> train, std::span<const AnnotatedPost> future,
                                 std::chrono::sys_days from, std::chrono::sys_days to,
                                 const SentimentLexicon& lexicon, const TrainingConfig& config) {
    if (from > to) throw ValidationError("future_window: window start after end");
    ProtocolRun run;
    run.plan.seed = config.seed;
    std::vector<AnnotatedPost> test;
    for (std::size_t i = 0; i < future.size(); ++i) {
        if (in_window(future[i].post.created_utc, from, to)) {
            run.plan.test.push_back(i);
            test.push_back(future[i]);
        }
    }
    if (test.empty()) throw DataError("future_window: no annotated posts inside the window");
    for (std::size_t i = 0; i < train.size(); ++i) run.plan.train.push_back(i);
    run.pipeline = fit_pipeline(train, lexicon, config);
    run.report = evaluate_pipeline(run.pipeline, train, test, config, "future_window");
    return run;
}

// ---------------------------------------------------------------------------
// Human evaluation
// ---------------------------------------------------------------------------

struct HumanEvalSample {
    std::vector<Post> rows;
    std::size_t window_size = 0;
    /// The window held fewer than the requested number of posts.
    bool undersized = false;
};

/// Uniform sample without replacement of n posts dated within [from, to].
inline HumanEvalSample human_eval_sample(std::span<const Post> posts, std::chrono::sys_days from,
                                         std::chrono::sys_days to, std::size_t n, std::uint64_t seed) {
    if (from > to) throw ValidationError("human-eval: window start after end");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (in_window(posts[i].created_utc, from, to)) idx.push_back(i);
    }
    if (idx.empty()) throw DataError("human-eval: no posts inside the window");
    HumanEvalSample out;
    out.window_size = idx.size();
    out.undersized = idx.size() < n;
    const std::size_t take = std::min(n, idx.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + uniform_index(rng, idx.size() - i);
        std::swap(idx[i], idx[j]);
        out.rows.push_back(posts[idx[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

struct AgreementReport {
    std::vector<std::string> labels;
    /// nullopt where the label's item totals have zero variance.
    std::vector<std::optional<double>> alpha;
    /// Mean over the SOA labels with a defined alpha.
    std::optional<double> soa_mean;
    std::optional<double> intensity;
    std::size_t items = 0;
    std::size_t raters = 0;
};

/// Cronbach's alpha per label with rater slots as components: each post rated
/// at least `raters` times contributes its first `raters` ratings by rater id.
inline AgreementReport agreement(std::span<const AnnotatedPost> posts, std::size_t raters = 2) {
    if (raters < 2) throw ValidationError("agreement: need at least 2 raters");
    std::vector<std::vector<RaterAnnotation>> items;
    for (const auto& p : posts) {
        if (p.ratings.size() < raters) continue;
        auto r = p.ratings;
        std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.rater_id < b.rater_id; });
        r.resize(raters);
        items.push_back(std::move(r));
    }
    if (items.size() < 2) throw DataError("agreement: fewer than 2 posts carry enough ratings");

    AgreementReport rep;
    rep.items = items.size();
    rep.raters = raters;
    auto matrix = [&](auto value) {
        std::vector<std::vector<double>> m(raters, std::vector<double>(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i) {
            for (std::size_t k = 0; k < raters; ++k) m[k][i] = value(items[i][k]);
        }
        return m;
    };
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        const auto a = cronbach_alpha(matrix([s](const RaterAnnotation& r) { return r.soa[s] ? 1.0 : 0.0; }));
        rep.labels.emplace_back(kSubjectNames[s]);
        rep.alpha.push_back(a);
        if (a) {
            sum += *a;
            ++defined;
        }
    }
    if (defined > 0) rep.soa_mean = sum / static_cast<double>(defined);
    rep.intensity =
        cronbach_alpha(matrix([](const RaterAnnotation& r) { return static_cast<double>(static_cast<int>(r.intensity)); }));
    return rep;
}

}  // namespace soa
