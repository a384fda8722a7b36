// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#include <catch_amalgamated.hpp>

#include <chrono>
#include <set>
#include <sstream>
#include <string>

#include "soa/corpus.hpp"

using namespace std::chrono;

namespace {

std::int64_t at(year_month_day d, int hour = 12) { return soa::epoch_seconds(sys_days{d}) + hour * 3600; }

std::string line(const std::string& id, std::int64_t t, const std::string& extra = "") {
    return R"({"id":")" + id + R"(","author":"a","title":"t )" + id + R"(","selftext":"body","created_utc":)" +
           std::to_string(t) + extra + "}\n";
}

soa::Post post(const std::string& id, std::int64_t t, const std::string& author = "a") {
    soa::Post p;
    p.id = id;
    p.author_id = author;
    p.title = "title";
    p.created_utc = t;
    return p;
}

}  // namespace

TEST_CASE("load_posts keeps well-formed active posts", "[corpus]") {
    std::istringstream in(line("1", 1583020800) + line("2", 1583020900));
    const auto c = soa::load_posts(in);
    CHECK(c.active.size() == 2);
    CHECK(c.skipped.empty());
    CHECK(c.active[0].text() == "t 1 body");
}

TEST_CASE("deleted and removed posts are skipped with a reason", "[corpus]") {
    std::istringstream in(line("1", 1583020800, R"(,"status":"removed")") +
                          line("2", 1583020800, R"(,"status":"deleted")") +
                          R"({"id":"3","title":"x","selftext":"[removed]","created_utc":1583020800})" "\n" +
                          line("4", 1583020800));
    const auto c = soa::load_posts(in);
    CHECK(c.active.size() == 1);
    REQUIRE(c.skipped.size() == 3);
    CHECK(c.skipped[0].reason == "status removed");
    CHECK(c.skipped[0].line_no == 1);
    CHECK(c.skipped[1].reason == "status deleted");
}

TEST_CASE("URL-only posts are flagged unusable", "[corpus]") {
    std::istringstream in(R"({"id":"1","title":"","selftext":"https://example.com/x","created_utc":1583020800})" "\n"
                          R"({"id":"2","title":"","selftext":"  www.example.org  ","created_utc":1583020800})" "\n"
                          R"({"id":"3","title":"see","selftext":"https://example.com","created_utc":1583020800})" "\n");
    const auto c = soa::load_posts(in);
    CHECK(c.unusable.size() == 2);
    CHECK(c.active.size() == 1);
    CHECK(soa::is_unusable_text(""));
    CHECK_FALSE(soa::is_unusable_text("hello http://x.y"));
}

TEST_CASE("malformed lines land in the skip report, never silently dropped", "[corpus]") {
    std::istringstream in(line("1", 1583020800) + "{not json\n" + "\n" + line("1", 1583020800) +
                          R"({"id":"9","created_utc":"soon"})" "\n" + R"({"id":"8","created_utc":-5})" "\n");
    const auto c = soa::load_posts(in);
    CHECK(c.active.size() == 1);
    CHECK(c.skipped.size() == 5);
    CHECK(c.active.size() + c.skipped.size() + c.unusable.size() == c.total_lines);
    std::ostringstream report;
    soa::write_skip_report(report, c);
    CHECK_THAT(report.str(), Catch::Matchers::StartsWith("line_no,reason\n2,\"malformed JSON\""));
}

TEST_CASE("unreadable file is a data error", "[corpus]") {
    CHECK_THROWS_AS(soa::load_posts(std::filesystem::path("/nonexistent/posts.jsonl")), soa::DataError);
}

TEST_CASE("schema mapping renames fields", "[corpus]") {
    soa::PostSchema schema;
    schema.id = "pid";
    schema.body = "text";
    std::istringstream in(R"({"pid":"x","text":"hello","created_utc":1583020800})" "\n");
    const auto c = soa::load_posts(in, schema);
    REQUIRE(c.active.size() == 1);
    CHECK(c.active[0].id == "x");
    CHECK(c.active[0].body == "hello");
}

TEST_CASE("annotated posts: labels, intensity, work implies health, ratings", "[corpus]") {
    std::istringstream in(
        line("1", 1583020800, R"(,"labels":["health","work"],"intensity":2)") +
        line("2", 1583020800, R"(,"labels":{"finance":true,"travel":1},"intensity":0)") +
        line("3", 1583020800, R"(,"labels":["work"],"intensity":1)") +
        line("4", 1583020800, R"(,"labels":["health"],"intensity":3)") +
        line("5", 1583020800, R"(,"labels":["nonsense"],"intensity":0)") +
        line("6", 1583020800, R"(,"intensity":0)") +
        line("7", 1583020800,
             R"(,"labels":[],"intensity":0,"ratings":[{"rater":"r1","labels":["death"],"intensity":1},)"
             R"({"rater":"r2","labels":[],"intensity":0}])"));
    const auto c = soa::load_annotated(in);
    REQUIRE(c.active.size() == 3);
    CHECK(c.active[0].soa[soa::Subject::kWork]);
    CHECK(c.active[0].intensity == soa::IntensityLevel::kExtreme);
    CHECK(c.active[1].soa[soa::Subject::kFinance]);
    CHECK(c.active[1].soa[soa::Subject::kTravel]);
    CHECK(c.active[1].soa.count() == 2);
    REQUIRE(c.active[2].ratings.size() == 2);
    CHECK(c.active[2].ratings[0].soa[soa::Subject::kDeath]);
    REQUIRE(c.skipped.size() == 4);
    CHECK(c.skipped[0].reason == "work label without health label");
}

TEST_CASE("intensity aggregation", "[corpus]") {
    STATIC_REQUIRE_FALSE(soa::combine_intensity_labels(soa::IntensityLevel::kNone));
    STATIC_REQUIRE_FALSE(soa::combine_intensity_labels(soa::IntensityLevel::kMild));
    STATIC_REQUIRE(soa::combine_intensity_labels(soa::IntensityLevel::kExtreme));
    CHECK_FALSE(soa::intensity_from_int(3));
}

TEST_CASE("period keys in UTC", "[corpus]") {
    const auto leap_end = at(2020y / 2 / 29, 0) + 86399;
    CHECK(soa::period_of(leap_end, soa::Granularity::kMonth).to_string() == "2020-02");
    CHECK(soa::period_of(leap_end + 1, soa::Granularity::kMonth).to_string() == "2020-03");
    // 2020-03-01 is a Sunday, 2020-03-02 a Monday.
    const auto sun = soa::period_of(at(2020y / 3 / 1), soa::Granularity::kWeek);
    const auto mon = soa::period_of(at(2020y / 3 / 2), soa::Granularity::kWeek);
    CHECK(sun.to_string() == "2020-02-24");
    CHECK(mon.to_string() == "2020-03-02");
    CHECK(sun < mon);
    CHECK(soa::parse_month("2020-10").to_string() == "2020-10");
    CHECK_THROWS_AS(soa::parse_month("2020-13"), soa::ValidationError);
    CHECK_THROWS_AS(soa::parse_date("2021-02-30"), soa::ValidationError);
}

TEST_CASE("bucketing partitions the collection", "[corpus]") {
    std::vector<soa::Post> posts;
    for (int i = 0; i < 1023; ++i) posts.push_back(post(std::to_string(i), at(2020y / 3 / 1) + i * 2000));
    posts.push_back(post("feb", at(2020y / 2 / 10)));
    const auto b = soa::bucket_by_period(posts, soa::Granularity::kMonth);
    REQUIRE(b.size() == 2);
    CHECK(b.begin()->first.to_string() == "2020-02");
    CHECK(b.at(soa::parse_month("2020-03")).size() == 1023);
    std::size_t total = 0;
    for (const auto& [k, v] : soa::bucket_by_period(posts, soa::Granularity::kWeek)) total += v.size();
    CHECK(total == posts.size());
}

TEST_CASE("stratified sample draws per_month from each month", "[corpus]") {
    std::vector<soa::Post> posts;
    int n = 0;
    for (auto m : {4u, 5u, 6u}) {
        for (int i = 0; i < 500; ++i) posts.push_back(post(std::to_string(n++), at(2020y / month{m} / 10) + i));
    }
    for (int i = 0; i < 85; ++i) posts.push_back(post(std::to_string(n++), at(2020y / 2 / 10) + i));

    const auto s = soa::stratified_sample(posts, 100, 42);
    CHECK(s.posts.size() == 385);
    REQUIRE(s.undersized.size() == 1);
    CHECK(s.undersized[0].to_string() == "2020-02");
    std::map<std::string, int> per_month;
    std::set<std::string> ids;
    for (const auto& p : s.posts) {
        ++per_month[soa::period_of(p.created_utc, soa::Granularity::kMonth).to_string()];
        ids.insert(p.id);
    }
    CHECK(ids.size() == s.posts.size());
    CHECK(per_month["2020-04"] == 100);
    CHECK(per_month["2020-02"] == 85);

    const auto again = soa::stratified_sample(posts, 100, 42);
    std::vector<std::string> a, b;
    for (const auto& p : s.posts) a.push_back(p.id);
    for (const auto& p : again.posts) b.push_back(p.id);
    CHECK(a == b);
    const auto other = soa::stratified_sample(posts, 100, 43);
    std::vector<std::string> c;
    for (const auto& p : other.posts) c.push_back(p.id);
    CHECK(a != c);

    CHECK(soa::stratified_sample({}, 100, 1).warnings.size() == 1);
    CHECK_THROWS_AS(soa::stratified_sample(posts, 0, 1), soa::ValidationError);
}

TEST_CASE("month merge pools small months into one stratum", "[corpus]") {
    std::vector<soa::Post> posts;
    int n = 0;
    for (int i = 0; i < 85; ++i) posts.push_back(post(std::to_string(n++), at(2020y / 2 / 10) + i));
    for (int i = 0; i < 300; ++i) posts.push_back(post(std::to_string(n++), at(2020y / 3 / 10) + i));
    const auto s = soa::stratified_sample(posts, 100, 1, {{soa::parse_month("2020-02"), soa::parse_month("2020-03")}});
    CHECK(s.posts.size() == 100);
    CHECK(s.undersized.empty());
}

TEST_CASE("month statistics", "[corpus]") {
    std::vector<soa::Post> posts;
    for (int i = 0; i < 1023; ++i) posts.push_back(post(std::to_string(i), at(2020y / 12 / 5) + i, "u" + std::to_string(i % 656)));
    const auto stats = soa::month_stats(posts);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].posts == 1023);
    CHECK(stats[0].users == 656);
    CHECK(stats[0].posts_per_user() == Catch::Approx(1.56).margin(0.005));
}
