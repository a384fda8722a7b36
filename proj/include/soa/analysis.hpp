// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "soa/corpus.hpp"
#include "soa/error.hpp"
#include "soa/features.hpp"
#include "soa/labels.hpp"
#include "soa/linear.hpp"
#include "soa/random.hpp"

namespace soa {

/// One post's machine annotation as consumed by the analyses.
struct PredictionRow {
    std::string id;
    std::int64_t created_utc = 0;
    SoaLabels soa;
    bool intensity = false;
};

struct TrendSeries {
    PeriodKey period;
    std::vector<std::pair<std::string, double>> values;
    std::size_t n_posts = 0;
};

/// Monthly fraction of posts predicted positive for each SOA. Periods without
/// posts do not appear.
inline std::vector<TrendSeries> soa_trend(std::span<const PredictionRow> rows,
                                          Granularity g = Granularity::kMonth) {
    std::map<PeriodKey, std::pair<std::array<std::size_t, kNumSubjects>, std::size_t>> acc;
    for (const auto& r : rows) {
        auto& [counts, n] = acc[period_of(r.created_utc, g)];
        for (std::size_t s = 0; s < kNumSubjects; ++s) counts[s] += r.soa[s] ? 1 : 0;
        ++n;
    }
    std::vector<TrendSeries> out;
    for (const auto& [period, entry] : acc) {
        TrendSeries t{period, {}, entry.second};
        for (std::size_t s = 0; s < kNumSubjects; ++s) {
            t.values.emplace_back(kSubjectNames[s], static_cast<double>(entry.first[s]) / static_cast<double>(entry.second));
        }
        out.push_back(std::move(t));
    }
    return out;
}

/// Weekly (Monday-start) mean of the binary intensity prediction.
inline std::vector<TrendSeries> intensity_trend(std::span<const PredictionRow> rows,
                                                Granularity g = Granularity::kWeek) {
    std::map<PeriodKey, std::pair<std::size_t, std::size_t>> acc;
    for (const auto& r : rows) {
        auto& [pos, n] = acc[period_of(r.created_utc, g)];
        pos += r.intensity ? 1 : 0;
        ++n;
    }
    std::vector<TrendSeries> out;
    for (const auto& [period, e] : acc) {
        out.push_back({period, {{std::string(kIntensityName), static_cast<double>(e.first) / static_cast<double>(e.second)}},
                       e.second});
    }
    return out;
}

inline void write_trend_csv(std::ostream& out, std::span<const TrendSeries> series) {
    out << "period,series,value,n_posts\n";
    for (const auto& t : series) {
        for (const auto& [name, v] : t.values) out << t.period.to_string() << ',' << name << ',' << v << ',' << t.n_posts << '\n';
    }
}

// ---------------------------------------------------------------------------
// Case overlay
// ---------------------------------------------------------------------------

struct CasePoint {
    std::chrono::sys_days date;
    double cases = 0.0;
};

/// Parses a `date,cases` CSV (header required, dates YYYY-MM-DD, counts >= 0).
inline std::vector<CasePoint> load_cases(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<CasePoint> out;
    if (!std::getline(in, line)) throw DataError("cases: empty file");
    ++line_no;
    if (line.rfind("date,cases", 0) != 0) throw DataError("cases: header must be 'date,cases'");
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string where = "cases: line " + std::to_string(line_no);
        if (comma == std::string::npos) throw DataError(where + ": expected 'date,cases'");
        CasePoint p;
        try {
            p.date = parse_date(line.substr(0, comma));
        } catch (const Error&) {
            throw DataError(where + ": bad date '" + line.substr(0, comma) + "'");
        }
        const std::string num = line.substr(comma + 1);
        std::size_t used = 0;
        try {
            p.cases = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != num.size() || !(p.cases >= 0.0)) {
            throw DataError(where + ": bad case count '" + num + "'");
        }
        out.push_back(p);
    }
    return out;
}

struct OverlayRow {
    TrendSeries trend;
    /// Case total in the period; empty when the series has no data there.
    std::optional<double> cases;
    std::optional<double> cases_normalized;
};

/// Left join of trend periods with case totals per period, normalized by the
/// largest period total.
inline std::vector<OverlayRow> overlay_cases(std::span<const TrendSeries> trends, std::span<const CasePoint> cases) {
    std::map<PeriodKey, double> totals;
    for (const auto& c : cases) {
        if (trends.empty()) break;
        const PeriodKey key = period_of(epoch_seconds(c.date), trends.front().period.granularity);
        totals[key] += c.cases;
    }
    double max = 0.0;
    for (const auto& [k, v] : totals) max = std::max(max, v);
    std::vector<OverlayRow> out;
    for (const auto& t : trends) {
        OverlayRow row{t, std::nullopt, std::nullopt};
        if (auto it = totals.find(t.period); it != totals.end()) {
            row.cases = it->second;
            row.cases_normalized = max > 0.0 ? it->second / max : 0.0;
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_overlay_csv(std::ostream& out, std::span<const OverlayRow> rows) {
    out << "period,series,value,n_posts,cases,cases_normalized\n";
    for (const auto& r : rows) {
        for (const auto& [name, v] : r.trend.values) {
            out << r.trend.period.to_string() << ',' << name << ',' << v << ',' << r.trend.n_posts << ',';
            if (r.cases) out << *r.cases;
            out << ',';
            if (r.cases_normalized) out << *r.cases_normalized;
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

/// Product-moment correlation; nullopt when either input has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson: inputs differ in length");
    if (x.size() < 3) throw ValidationError("pearson: need at least 3 observations");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Two-sided p-value of r under H0: rho = 0 via t = r sqrt((n-2)/(1-r^2)).
inline double correlation_p_value(double r, std::size_t n) {
    if (n < 3) throw ValidationError("correlation p-value: need n >= 3");
    if (std::fabs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = std::fabs(r) * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

/// Two-sided permutation p-value for r: (1 + #{|r_perm| >= |r|}) / (1 + shuffles).
inline double permutation_p_value(std::span<const double> x, std::span<const double> y, std::size_t shuffles,
                                  std::uint64_t seed) {
    const auto r0 = pearson(x, y);
    if (!r0) throw DegenerateError("permutation test: zero variance input");
    std::vector<double> perm(y.begin(), y.end());
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < shuffles; ++i) {
        shuffle(std::span<double>(perm), rng);
        const auto r = pearson(x, perm);
        if (std::fabs(*r) >= std::fabs(*r0) - 1e-12) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(shuffles + 1);
}

/// Holm step-down adjustment, returned in input order.
inline std::vector<double> holm_correct(std::span<const double> p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("holm: p-value outside [0, 1]");
    }
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        running = std::max(running, std::min(1.0, static_cast<double>(m - j) * p[order[j]]));
        adj[order[j]] = running;
    }
    return adj;
}

/// "**" below .001, "*" below .01, a middle dot below .05.
inline std::string significance_stars(double p) {
    if (p < 0.001) return "**";
    if (p < 0.01) return "*";
    if (p < 0.05) return "·";
    return "";
}

struct CorrelationCell {
    std::string a, b;
    /// Empty when either variable is constant.
    std::optional<double> r;
    double p_raw = 1.0;
    double p_holm = 1.0;
};

struct CorrelationMatrix {
    std::vector<std::string> names;
    std::size_t n = 0;
    /// Upper triangle in row-major order (i < j).
    std::vector<CorrelationCell> cells;

    const CorrelationCell* find(std::string_view x, std::string_view y) const {
        for (const auto& c : cells) {
            if ((c.a == x && c.b == y) || (c.a == y && c.b == x)) return &c;
        }
        return nullptr;
    }
};

/// Pairwise Pearson over named columns, Holm-corrected jointly over the
/// defined cells. With `shuffles` > 0 the raw p-values come from permutation.
inline CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                            const std::vector<std::vector<double>>& columns,
                                            std::size_t shuffles = 0, std::uint64_t seed = 0) {
    if (names.size() != columns.size()) throw ValidationError("correlation: names and columns differ in count");
    CorrelationMatrix m;
    m.names = names;
    m.n = columns.empty() ? 0 : columns[0].size();
    if (m.n < 3) throw ValidationError("correlation: need at least 3 posts");
    std::vector<std::size_t> defined;
    std::vector<double> raw;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = i + 1; j < columns.size(); ++j) {
            CorrelationCell c{names[i], names[j], pearson(columns[i], columns[j]), 1.0, 1.0};
            if (c.r) {
                c.p_raw = shuffles > 0 ? permutation_p_value(columns[i], columns[j], shuffles,
                                                             derive_seed(seed, static_cast<std::uint64_t>(m.cells.size())))
                                       : correlation_p_value(*c.r, m.n);
                defined.push_back(m.cells.size());
                raw.push_back(c.p_raw);
            }
            m.cells.push_back(std::move(c));
        }
    }
    const auto adj = holm_correct(raw);
    for (std::size_t k = 0; k < defined.size(); ++k) m.cells[defined[k]].p_holm = adj[k];
    return m;
}

/// The nine SOA columns followed by intensity, as 0/1 reals.
inline CorrelationMatrix label_correlations(std::span<const PredictionRow> rows, std::size_t shuffles = 0,
                                            std::uint64_t seed = 0) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols(kNumSubjects + 1);
    for (std::size_t s = 0; s < kNumSubjects; ++s) names.emplace_back(kSubjectNames[s]);
    names.emplace_back(kIntensityName);
    for (const auto& r : rows) {
        for (std::size_t s = 0; s < kNumSubjects; ++s) cols[s].push_back(r.soa[s] ? 1.0 : 0.0);
        cols[kNumSubjects].push_back(r.intensity ? 1.0 : 0.0);
    }
    return correlation_matrix(names, cols, shuffles, seed);
}

inline void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
    out << "var_a,var_b,n,r,p_raw,p_holm,stars\n";
    for (const auto& c : m.cells) {
        out << c.a << ',' << c.b << ',' << m.n << ',';
        if (c.r) {
            out << *c.r << ',' << c.p_raw << ',' << c.p_holm << ',' << significance_stars(c.p_holm);
        } else {
            out << "undefined,,,";
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Trend slope
// ---------------------------------------------------------------------------

inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope: need two or more paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DegenerateError("slope: x has zero variance");
    return sxy / sxx;
}

struct SlopeTest {
    double slope = 0.0;
    double p_value = 1.0;
};

/// Slope of y against its index, with a two-sided permutation p-value.
inline SlopeTest slope_permutation_test(std::span<const double> y, std::size_t shuffles, std::uint64_t seed) {
    std::vector<double> x(y.size());
    std::iota(x.begin(), x.end(), 0.0);
    SlopeTest t;
    t.slope = least_squares_slope(x, y);
    std::vector<double> perm(y.begin(), y.end());
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < shuffles; ++i) {
        shuffle(std::span<double>(perm), rng);
        if (std::fabs(least_squares_slope(x, perm)) >= std::fabs(t.slope) - 1e-12) ++hits;
    }
    t.p_value = static_cast<double>(hits + 1) / static_cast<double>(shuffles + 1);
    return t;
}

// ---------------------------------------------------------------------------
// Feature importance
// ---------------------------------------------------------------------------

struct RankedFeature {
    std::string name;
    double coefficient = 0.0;
};

struct TopFeatures {
    std::vector<RankedFeature> features;
    /// More features were requested than the model has.
    bool truncated = false;
};

/// Features by descending signed coefficient (ties by column index).
template <typename NameOf>
TopFeatures top_features(std::span<const double> weights, NameOf name_of, std::size_t n = 10) {
    TopFeatures out;
    out.truncated = n > weights.size();
    n = std::min(n, weights.size());
    std::vector<std::size_t> idx(weights.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(), [&](std::size_t a, std::size_t b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    for (std::size_t i = 0; i < n; ++i) out.features.push_back({name_of(idx[i]), weights[idx[i]]});
    return out;
}

inline TopFeatures top_features(const LinearModel& model, const FeatureBundle& bundle, std::size_t n = 10) {
    if (model.weights.size() != bundle.total_dim()) {
        throw ValidationError("top_features: model and feature bundle differ in dimension");
    }
    return top_features(model.weights, [&](std::size_t i) { return bundle.feature_name(i); }, n);
}

}  // namespace soa
