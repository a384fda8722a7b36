// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

#include "soa/analysis.hpp"

using Catch::Approx;
using namespace std::chrono;

namespace {

std::int64_t at(year_month_day d) { return soa::epoch_seconds(sys_days{d}) + 3600; }

soa::PredictionRow row(std::int64_t t, std::initializer_list<soa::Subject> on, bool intensity) {
    soa::PredictionRow r;
    r.created_utc = t;
    for (auto s : on) r.soa[s] = true;
    r.intensity = intensity;
    return r;
}

}  // namespace

TEST_CASE("Holm adjustment examples", "[analysis]") {
    const std::vector<double> p{0.01, 0.02, 0.30};
    CHECK(soa::holm_correct(p) == std::vector<double>{0.03, 0.04, 0.30});
    // Input order is preserved and monotonicity enforced.
    const std::vector<double> q{0.04, 0.01, 0.03};
    const auto adj = soa::holm_correct(q);
    CHECK(adj[1] == Approx(0.03));
    CHECK(adj[2] == Approx(0.06));
    CHECK(adj[0] == Approx(0.06));
    CHECK(soa::holm_correct(std::vector<double>{0.6, 0.7}) == std::vector<double>{1.0, 1.0});
    CHECK(soa::holm_correct({}).empty());
    CHECK_THROWS_AS(soa::holm_correct(std::vector<double>{1.2}), soa::ValidationError);
}

TEST_CASE("Holm adjusted values dominate raw values and keep their order", "[analysis][property]") {
    soa::Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> p(1 + soa::uniform_index(rng, 20));
        for (auto& v : p) v = soa::uniform01(rng);
        const auto adj = soa::holm_correct(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(adj[i] >= p[i]);
            CHECK(adj[i] <= 1.0);
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] < p[j]) CHECK(adj[i] <= adj[j]);
            }
        }
    }
}

TEST_CASE("Pearson correlation", "[analysis]") {
    const std::vector<double> x{1, 0, 1, 0}, y{1, 0, 0, 0};
    CHECK(*soa::pearson(x, y) == Approx(1.0 / std::sqrt(3.0)).margin(1e-12));
    CHECK(*soa::pearson(x, y) == Approx(0.5774).margin(1e-4));
    CHECK(*soa::pearson(x, x) == 1.0);
    const std::vector<double> flat{1, 1, 1, 1};
    CHECK_FALSE(soa::pearson(x, flat).has_value());
    CHECK_THROWS_AS(soa::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), soa::ValidationError);
    CHECK_THROWS_AS(soa::pearson(x, std::vector<double>{1, 2, 3}), soa::ValidationError);
}

TEST_CASE("correlation p-values", "[analysis]") {
    CHECK(soa::correlation_p_value(1.0, 10) == 0.0);
    CHECK(soa::correlation_p_value(0.0, 10) == Approx(1.0));
    // r = 0.5, n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, two-sided p = 0.0979
    CHECK(soa::correlation_p_value(0.5, 12) == Approx(0.0979).margin(5e-4));
    CHECK(soa::correlation_p_value(-0.5, 12) == soa::correlation_p_value(0.5, 12));

    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) {
        a.push_back(i);
        b.push_back(i % 7);
    }
    const double p = soa::permutation_p_value(a, a, 999, 3);
    CHECK(p == Approx(1.0 / 1000));
    CHECK(soa::permutation_p_value(a, b, 999, 3) > 0.01);
}

TEST_CASE("significance stars", "[analysis]") {
    CHECK(soa::significance_stars(0.0005) == "**");
    CHECK(soa::significance_stars(0.005) == "*");
    CHECK(soa::significance_stars(0.02) == "\xC2\xB7");
    CHECK(soa::significance_stars(0.05) == "");
}

TEST_CASE("correlation matrix over labels", "[analysis]") {
    std::vector<soa::PredictionRow> rows;
    soa::Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        soa::PredictionRow r;
        for (std::size_t s = 0; s < soa::kNumSubjects; ++s) r.soa[s] = soa::bernoulli(rng, 0.3);
        r.soa[soa::Subject::kDeath] = false;
        r.intensity = r.soa[soa::Subject::kMental];
        rows.push_back(r);
    }
    const auto m = soa::label_correlations(rows);
    CHECK(m.cells.size() == 45);
    const auto* copy = m.find("intensity", "mental");
    REQUIRE(copy != nullptr);
    CHECK(*copy->r == 1.0);
    CHECK(copy->p_holm < 0.001);
    const auto* constant = m.find("death", "health");
    REQUIRE(constant != nullptr);
    CHECK_FALSE(constant->r.has_value());

    std::ostringstream csv;
    soa::write_correlation_csv(csv, m);
    CHECK_THAT(csv.str(), Catch::Matchers::StartsWith("var_a,var_b,n,r,p_raw,p_holm,stars\n"));
    CHECK_THAT(csv.str(), Catch::Matchers::ContainsSubstring("death,travel,200,undefined"));
    CHECK_THAT(csv.str(), Catch::Matchers::ContainsSubstring("mental,intensity,200,1,0,0,**"));

    const auto perm = soa::label_correlations(rows, 199, 5);
    CHECK(perm.find("mental", "intensity")->p_raw == Approx(1.0 / 200));
    CHECK_THROWS_AS(soa::label_correlations(std::span<const soa::PredictionRow>(rows).first(2)), soa::ValidationError);
}

TEST_CASE("monthly SOA and weekly intensity trends", "[analysis]") {
    const std::vector<soa::PredictionRow> rows{
        row(at(2020y / 3 / 2), {soa::Subject::kHealth}, true),
        row(at(2020y / 3 / 3), {soa::Subject::kHealth, soa::Subject::kWork}, false),
        row(at(2020y / 3 / 10), {}, false),
        row(at(2020y / 3 / 11), {soa::Subject::kFinance}, true),
        row(at(2020y / 5 / 1), {}, true),
    };
    const auto monthly = soa::soa_trend(rows);
    REQUIRE(monthly.size() == 2);
    CHECK(monthly[0].period.to_string() == "2020-03");
    CHECK(monthly[0].n_posts == 4);
    CHECK(monthly[0].values.size() == soa::kNumSubjects);
    CHECK(monthly[0].values[2].first == "health");
    CHECK(monthly[0].values[2].second == 0.5);
    CHECK(monthly[0].values[0].second == 0.25);

    const auto weekly = soa::intensity_trend(rows);
    REQUIRE(weekly.size() == 3);
    CHECK(weekly[0].period.to_string() == "2020-03-02");
    CHECK(weekly[0].values[0].second == 0.5);
    CHECK(weekly[1].values[0].second == 0.5);
    CHECK(weekly[2].values[0].second == 1.0);

    std::ostringstream csv;
    soa::write_trend_csv(csv, weekly);
    CHECK(csv.str() == "period,series,value,n_posts\n2020-03-02,intensity,0.5,2\n2020-03-09,intensity,0.5,2\n"
                       "2020-04-27,intensity,1,1\n");
}

TEST_CASE("case overlay", "[analysis]") {
    std::istringstream in("date,cases\n2020-03-01,10\n2020-03-20,30\n2020-04-02,80\n2020-06-01,5\n");
    const auto cases = soa::load_cases(in);
    REQUIRE(cases.size() == 4);

    const std::vector<soa::PredictionRow> rows{row(at(2020y / 3 / 5), {}, false), row(at(2020y / 4 / 5), {}, false),
                                               row(at(2020y / 5 / 5), {}, false)};
    const auto overlay = soa::overlay_cases(soa::soa_trend(rows), cases);
    REQUIRE(overlay.size() == 3);
    CHECK(*overlay[0].cases == 40.0);
    CHECK(*overlay[0].cases_normalized == 0.5);
    CHECK(*overlay[1].cases_normalized == 1.0);
    CHECK_FALSE(overlay[2].cases.has_value());

    std::istringstream bad_header("day,n\n");
    CHECK_THROWS_AS(soa::load_cases(bad_header), soa::DataError);
    std::istringstream bad_row("date,cases\n2020-03-01,-4\n");
    CHECK_THROWS_AS(soa::load_cases(bad_row), soa::DataError);
    std::istringstream bad_date("date,cases\n2020-02-30,4\n");
    CHECK_THROWS_AS(soa::load_cases(bad_date), soa::DataError);
}

TEST_CASE("least-squares slope and its permutation test", "[analysis]") {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    CHECK(soa::least_squares_slope(x, y) == Approx(2.0));
    CHECK_THROWS_AS(soa::least_squares_slope(std::vector<double>{1, 1}, std::vector<double>{0, 1}),
                    soa::DegenerateError);

    std::vector<double> decay;
    for (int w = 0; w < 20; ++w) decay.push_back(0.6 - 0.02 * w + (w % 2 ? 0.01 : -0.01));
    const auto t = soa::slope_permutation_test(decay, 9999, 1);
    CHECK(t.slope < 0);
    CHECK(t.p_value < 0.01);

    std::vector<double> flat;
    for (int w = 0; w < 20; ++w) flat.push_back(w % 2 ? 0.5 : 0.4);
    CHECK(soa::slope_permutation_test(flat, 999, 1).p_value > 0.05);
}

TEST_CASE("top features by signed coefficient", "[analysis]") {
    const std::vector<double> w{0.5, -0.2, 0.9};
    const std::vector<std::string> names{"job", "rent", "topic:3"};
    auto name = [&](std::size_t i) { return names[i]; };
    const auto top = soa::top_features(w, name, 2);
    REQUIRE(top.features.size() == 2);
    CHECK(top.features[0].name == "topic:3");
    CHECK(top.features[1].name == "job");
    CHECK_FALSE(top.truncated);
    CHECK(soa::top_features(w, name, 0).features.empty());
    const auto all = soa::top_features(w, name, 5);
    CHECK(all.features.size() == 3);
    CHECK(all.truncated);
}
