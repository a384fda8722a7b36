// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soa/error.hpp"
#include "soa/linear.hpp"
#include "soa/random.hpp"

namespace soa {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ClassMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    ClassMetrics m{0.0, 0.0, 0.0, tp, fp, fn, tn};
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

/// Positive-class precision, recall and F1; any zero division yields 0.
inline ClassMetrics prf(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw ValidationError("prf: y_true and y_pred differ in length");
    if (y_true.empty()) throw ValidationError("prf: empty input");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] != 0, p = y_pred[i] != 0;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
        tn += !t && !p;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

/// Unweighted mean of per-class precision, recall and F1.
inline ClassMetrics macro_average(std::span<const ClassMetrics> parts) {
    ClassMetrics m;
    if (parts.empty()) return m;
    for (const auto& p : parts) {
        m.precision += p.precision;
        m.recall += p.recall;
        m.f1 += p.f1;
        m.tp += p.tp;
        m.fp += p.fp;
        m.fn += p.fn;
        m.tn += p.tn;
    }
    const auto n = static_cast<double>(parts.size());
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    return m;
}

/// Binary macro average: the mean of the positive-class and negative-class
/// metrics. Counts are those of the positive class.
inline ClassMetrics macro_prf(std::span<const int> y_true, std::span<const int> y_pred) {
    const ClassMetrics pos = prf(y_true, y_pred);
    std::vector<int> nt(y_true.size()), np(y_pred.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        nt[i] = y_true[i] ? 0 : 1;
        np[i] = y_pred[i] ? 0 : 1;
    }
    const ClassMetrics neg = prf(nt, np);
    const ClassMetrics parts[] = {pos, neg};
    ClassMetrics m = macro_average(parts);
    m.tp = pos.tp, m.fp = pos.fp, m.fn = pos.fn, m.tn = pos.tn;
    return m;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitPlan {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

namespace detail {

/// Indices grouped by stratum, each group shuffled with a stratum-specific
/// seed so the result does not depend on the other strata.
inline std::map<int, std::vector<std::size_t>> shuffled_strata(std::span<const int> strata, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);
    for (auto& [key, idx] : groups) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(key))));
        shuffle(std::span<std::size_t>(idx), rng);
    }
    return groups;
}

}  // namespace detail

/// Train/test split preserving stratum proportions. Per-stratum test counts
/// are floor(size * test_frac) plus one for the strata with the largest
/// remainders until the total equals round(n * test_frac). Singleton strata
/// always go to train.
inline SplitPlan stratified_split(std::span<const int> strata, double test_frac, std::uint64_t seed) {
    if (!(test_frac > 0.0 && test_frac < 1.0)) throw ValidationError("split: test_frac must be in (0, 1)");
    SplitPlan plan;
    plan.seed = seed;
    auto groups = detail::shuffled_strata(strata, seed);

    struct Quota {
        int key;
        std::size_t size;
        std::size_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [key, idx] : groups) {
        if (idx.size() < 2) {
            plan.warnings.push_back("stratum " + std::to_string(key) + " has a single sample; kept in train");
            continue;
        }
        const double exact = static_cast<double>(idx.size()) * test_frac;
        const auto take = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({key, idx.size(), take, exact - static_cast<double>(take)});
        assigned += take;
    }
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(strata.size()) * test_frac));
    std::stable_sort(quotas.begin(), quotas.end(),
                     [](const Quota& a, const Quota& b) { return a.remainder > b.remainder; });
    bool progress = true;
    while (assigned < target && progress) {
        progress = false;
        for (auto& q : quotas) {
            if (assigned == target) break;
            if (q.take < q.size) {
                ++q.take;
                ++assigned;
                progress = true;
            }
        }
    }
    std::map<int, std::size_t> take;
    for (const auto& q : quotas) take[q.key] = q.take;
    for (const auto& [key, idx] : groups) {
        const std::size_t t = take.contains(key) ? take[key] : 0;
        plan.test.insert(plan.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t));
        plan.train.insert(plan.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(t), idx.end());
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

/// k folds; within each stratum the per-fold counts differ by at most one.
inline std::vector<SplitPlan> stratified_kfold(std::span<const int> strata, int k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("kfold: k must be >= 2");
    if (static_cast<std::size_t>(k) > strata.size()) throw ValidationError("kfold: k exceeds the number of samples");
    const auto groups = detail::shuffled_strata(strata, seed);
    std::vector<int> fold_of(strata.size(), 0);
    std::vector<std::string> warnings;
    std::size_t pos = 0;
    for (const auto& [key, idx] : groups) {
        if (idx.size() < static_cast<std::size_t>(k)) {
            warnings.push_back("stratum " + std::to_string(key) + " has fewer samples than folds");
        }
        for (std::size_t i : idx) fold_of[i] = static_cast<int>(pos++ % static_cast<std::size_t>(k));
    }
    std::vector<SplitPlan> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < strata.size(); ++i) {
        for (int f = 0; f < k; ++f) {
            auto& plan = folds[static_cast<std::size_t>(f)];
            (fold_of[i] == f ? plan.test : plan.train).push_back(i);
        }
    }
    for (auto& f : folds) {
        f.seed = seed;
        f.warnings = warnings;
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

enum class SelectionMetric : std::uint8_t { kPositiveF1, kMacroF1 };

inline double selection_score(SelectionMetric metric, std::span<const int> y_true, std::span<const int> y_pred) {
    return metric == SelectionMetric::kPositiveF1 ? prf(y_true, y_pred).f1 : macro_prf(y_true, y_pred).f1;
}

/// Lexicographically ordered lattice loss x lambda x epochs.
inline std::vector<LinearConfig> make_grid(const std::vector<Loss>& losses, const std::vector<double>& lambdas,
                                           const std::vector<int>& epochs, std::uint64_t seed) {
    std::vector<LinearConfig> grid;
    for (Loss l : losses) {
        for (double lam : lambdas) {
            for (int e : epochs) {
                LinearConfig c;
                c.loss = l;
                c.lambda = lam;
                c.epochs = e;
                c.seed = seed;
                grid.push_back(c);
            }
        }
    }
    std::stable_sort(grid.begin(), grid.end());
    return grid;
}

struct GridRow {
    LinearConfig config;
    double mean_score = 0.0;
    std::vector<double> fold_scores;
    std::string error;
};

struct GridResult {
    LinearConfig best;
    double best_score = 0.0;
    std::vector<GridRow> table;
};

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

/// Mean k-fold CV score for every grid point (folds stratified on y and shared
/// by all points). The best mean wins; ties go to the lexicographically first
/// point. A point whose training fails on any fold is recorded and skipped.
inline GridResult grid_search(std::span<const FeatureVector> X, std::span<const int> y,
                              std::vector<LinearConfig> grid, int k, SelectionMetric metric, std::uint64_t seed) {
    if (grid.empty()) throw ValidationError("grid_search: empty grid");
    std::stable_sort(grid.begin(), grid.end());
    const auto folds = stratified_kfold(y, k, seed);

    struct FoldData {
        std::vector<FeatureVector> x_train;
        std::vector<int> y_train, y_test;
        std::vector<std::size_t> test;
    };
    std::vector<FoldData> data;
    data.reserve(folds.size());
    for (const auto& f : folds) {
        data.push_back({gather(X, std::span<const std::size_t>(f.train)), gather(y, std::span<const std::size_t>(f.train)),
                        gather(y, std::span<const std::size_t>(f.test)), f.test});
    }

    GridResult result;
    std::optional<std::size_t> best;
    for (const auto& cfg : grid) {
        GridRow row{cfg, 0.0, {}, {}};
        try {
            for (const auto& fd : data) {
                const LinearModel m = train_linear(fd.x_train, fd.y_train, cfg);
                std::vector<int> pred;
                pred.reserve(fd.test.size());
                for (std::size_t i : fd.test) pred.push_back(predict(m, X[i]).label ? 1 : 0);
                row.fold_scores.push_back(selection_score(metric, fd.y_test, pred));
            }
            row.mean_score = std::accumulate(row.fold_scores.begin(), row.fold_scores.end(), 0.0) /
                             static_cast<double>(row.fold_scores.size());
            if (!best || row.mean_score > result.table[*best].mean_score) best = result.table.size();
        } catch (const DegenerateError& e) {
            row.error = e.what();
            row.fold_scores.clear();
        }
        result.table.push_back(std::move(row));
    }
    if (!best) throw DegenerateError("grid_search: every grid point failed: " + result.table.back().error);
    result.best = result.table[*best].config;
    result.best_score = result.table[*best].mean_score;
    return result;
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

inline double sample_variance(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

/// Cronbach's alpha with raters as scale components over items:
/// k/(k-1) * (1 - sum of rater variances / variance of item totals).
/// Returns nullopt when the item totals have zero variance.
inline std::optional<double> cronbach_alpha(const std::vector<std::vector<double>>& ratings) {
    const std::size_t k = ratings.size();
    if (k < 2) throw ValidationError("cronbach: need at least 2 raters");
    const std::size_t n = ratings[0].size();
    if (n < 2) throw ValidationError("cronbach: need at least 2 items");
    std::vector<double> totals(n, 0.0);
    double sum_var = 0.0;
    for (const auto& r : ratings) {
        if (r.size() != n) throw ValidationError("cronbach: raters rated different numbers of items");
        sum_var += sample_variance(r);
        for (std::size_t i = 0; i < n; ++i) totals[i] += r[i];
    }
    const double total_var = sample_variance(totals);
    if (total_var == 0.0) return std::nullopt;
    return static_cast<double>(k) / static_cast<double>(k - 1) * (1.0 - sum_var / total_var);
}

}  // namespace soa
