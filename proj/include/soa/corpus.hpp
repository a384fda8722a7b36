// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "soa/error.hpp"
#include "soa/labels.hpp"
#include "soa/random.hpp"
#include "soa/text.hpp"

namespace soa {

enum class PostStatus : std::uint8_t { kActive, kDeleted, kRemoved };

struct Post {
    std::string id;
    std::string author_id;
    std::string title;
    std::string body;
    std::int64_t created_utc = 0;
    PostStatus status = PostStatus::kActive;

    /// Text seen by every feature extractor.
    std::string text() const {
        if (title.empty()) return body;
        if (body.empty()) return title;
        return title + " " + body;
    }
};

/// One rater's labels for a post, kept for agreement analysis.
struct RaterAnnotation {
    std::string rater_id;
    SoaLabels soa;
    IntensityLevel intensity = IntensityLevel::kNone;
};

struct AnnotatedPost {
    Post post;
    SoaLabels soa;
    IntensityLevel intensity = IntensityLevel::kNone;
    std::vector<RaterAnnotation> ratings;
};

/// Field names used to read a JSON Lines dump.
struct PostSchema {
    std::string id = "id";
    std::string author = "author";
    std::string title = "title";
    std::string body = "selftext";
    std::string created_utc = "created_utc";
    std::string status = "status";
    // Annotation fields, only read by load_annotated.
    std::string labels = "labels";
    std::string intensity = "intensity";
    std::string ratings = "ratings";
};

struct SkipEntry {
    std::size_t line_no = 0;
    std::string reason;
};

/// Result of one ingest run. active + skipped + unusable == total_lines.
template <typename Item>
struct Ingested {
    std::vector<Item> active;
    std::vector<SkipEntry> skipped;
    std::vector<SkipEntry> unusable;
    std::size_t total_lines = 0;
};

using PostCollection = Ingested<Post>;
using AnnotatedCollection = Ingested<AnnotatedPost>;

// ---------------------------------------------------------------------------
// Periods
// ---------------------------------------------------------------------------

enum class Granularity : std::uint8_t { kMonth, kWeek };

/// A calendar month (first day) or an ISO week (its Monday), both in UTC.
struct PeriodKey {
    Granularity granularity = Granularity::kMonth;
    std::chrono::sys_days start{};

    auto operator<=>(const PeriodKey&) const = default;

    std::string to_string() const {
        const std::chrono::year_month_day ymd{start};
        char buf[16];
        if (granularity == Granularity::kMonth) {
            std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()));
        } else {
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        }
        return buf;
    }
};

inline std::chrono::sys_days utc_day(std::int64_t epoch_seconds) {
    return std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{epoch_seconds}});
}

inline PeriodKey period_of(std::int64_t epoch_seconds, Granularity g) {
    using namespace std::chrono;
    const sys_days day = utc_day(epoch_seconds);
    if (g == Granularity::kMonth) {
        const year_month_day ymd{day};
        return {g, sys_days{ymd.year() / ymd.month() / 1}};
    }
    const weekday wd{day};
    const auto since_monday = days{(wd.c_encoding() + 6) % 7};
    return {g, day - since_monday};
}

/// Parses "YYYY-MM" into a month key.
inline PeriodKey parse_month(std::string_view text) {
    int y = 0;
    unsigned m = 0;
    char tail = 0;
    const std::string s(text);
    if (std::sscanf(s.c_str(), "%4d-%2u%c", &y, &m, &tail) != 2 || m < 1 || m > 12) {
        throw ValidationError("invalid month '" + s + "', expected YYYY-MM");
    }
    using namespace std::chrono;
    return {Granularity::kMonth, sys_days{year{y} / month{m} / 1}};
}

/// Parses "YYYY-MM-DD" into a UTC day.
inline std::chrono::sys_days parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string s(text);
    using namespace std::chrono;
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw ValidationError("invalid date '" + s + "', expected YYYY-MM-DD");
    }
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw ValidationError("invalid date '" + s + "'");
    return sys_days{ymd};
}

inline std::int64_t epoch_seconds(std::chrono::sys_days day) {
    return std::chrono::duration_cast<std::chrono::seconds>(day.time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

inline bool is_unusable_text(std::string_view text);

namespace detail {

inline bool is_url_token(std::string_view tok) {
    return tok.find("://") != std::string_view::npos || tok.starts_with("www.");
}

inline std::optional<PostStatus> parse_status(std::string_view s) {
    if (s.empty() || s == "active") return PostStatus::kActive;
    if (s == "deleted") return PostStatus::kDeleted;
    if (s == "removed") return PostStatus::kRemoved;
    return std::nullopt;
}

inline std::string json_string_field(const nlohmann::json& obj, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw DataError("field '" + key + "' is not a string");
}

struct ParsedLine {
    std::optional<Post> post;
    std::string reason;  // non-empty: skipped
};

inline ParsedLine parse_post(const nlohmann::json& obj, const PostSchema& schema) {
    ParsedLine out;
    if (!obj.is_object()) {
        out.reason = "not a JSON object";
        return out;
    }
    Post p;
    try {
        p.id = json_string_field(obj, schema.id);
        p.author_id = json_string_field(obj, schema.author);
        p.title = json_string_field(obj, schema.title);
        p.body = json_string_field(obj, schema.body);
    } catch (const DataError& e) {
        out.reason = e.what();
        return out;
    }
    if (p.id.empty()) {
        out.reason = "missing id";
        return out;
    }
    auto ts = obj.find(schema.created_utc);
    if (ts == obj.end() || !ts->is_number()) {
        out.reason = "missing or non-numeric " + schema.created_utc;
        return out;
    }
    p.created_utc = ts->is_number_float() ? static_cast<std::int64_t>(ts->get<double>())
                                          : ts->get<std::int64_t>();
    if (p.created_utc <= 0) {
        out.reason = "non-positive " + schema.created_utc;
        return out;
    }
    std::optional<PostStatus> status = PostStatus::kActive;
    if (auto st = obj.find(schema.status); st != obj.end() && !st->is_null()) {
        if (!st->is_string()) {
            out.reason = "non-string status";
            return out;
        }
        status = parse_status(st->get<std::string>());
        if (!status) {
            out.reason = "unknown status '" + st->get<std::string>() + "'";
            return out;
        }
    }
    // Reddit dumps mark moderation in the body rather than a status field.
    if (p.body == "[deleted]") status = PostStatus::kDeleted;
    if (p.body == "[removed]") status = PostStatus::kRemoved;
    p.status = *status;
    if (p.status == PostStatus::kDeleted) {
        out.reason = "status deleted";
        return out;
    }
    if (p.status == PostStatus::kRemoved) {
        out.reason = "status removed";
        return out;
    }
    out.post = std::move(p);
    return out;
}

template <typename Item, typename MakeItem>
Ingested<Item> ingest_lines(std::istream& in, const PostSchema& schema, MakeItem make_item) {
    Ingested<Item> result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto skip = [&](std::string reason) { result.skipped.push_back({line_no, std::move(reason)}); };
        if (std::all_of(line.begin(), line.end(), is_space)) {
            skip("blank line");
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            skip("malformed JSON");
            continue;
        }
        ParsedLine parsed = parse_post(obj, schema);
        if (!parsed.post) {
            skip(std::move(parsed.reason));
            continue;
        }
        if (!seen.insert(parsed.post->id).second) {
            skip("duplicate id '" + parsed.post->id + "'");
            continue;
        }
        if (is_unusable_text(parsed.post->text())) {
            result.unusable.push_back({line_no, "empty or URL-only text (id " + parsed.post->id + ")"});
            continue;
        }
        std::string reason;
        std::optional<Item> item = make_item(std::move(*parsed.post), obj, reason);
        if (!item) {
            skip(std::move(reason));
            continue;
        }
        result.active.push_back(std::move(*item));
    }
    result.total_lines = line_no;
    return result;
}

}  // namespace detail

/// True when nothing but URLs and whitespace remain in the text.
inline bool is_unusable_text(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !detail::is_space(text[j])) ++j;
        if (j > i && !detail::is_url_token(text.substr(i, j - i))) return false;
        i = j;
    }
    return true;
}

inline PostCollection load_posts(std::istream& in, const PostSchema& schema = {}) {
    return detail::ingest_lines<Post>(in, schema, [](Post p, const nlohmann::json&, std::string&) {
        return std::optional<Post>(std::move(p));
    });
}

inline PostCollection load_posts(const std::filesystem::path& path, const PostSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read post file: " + path.string());
    return load_posts(in, schema);
}

namespace detail {

inline bool parse_labels(const nlohmann::json& v, SoaLabels& out, std::string& reason) {
    out = {};
    if (v.is_array()) {
        for (const auto& name : v) {
            if (!name.is_string()) {
                reason = "label list contains a non-string";
                return false;
            }
            auto s = subject_from_name(name.get<std::string>());
            if (!s) {
                reason = "unknown label '" + name.get<std::string>() + "'";
                return false;
            }
            out[*s] = true;
        }
        return true;
    }
    if (v.is_object()) {
        for (std::size_t i = 0; i < kNumSubjects; ++i) {
            auto it = v.find(std::string(kSubjectNames[i]));
            if (it == v.end()) continue;
            if (it->is_boolean()) {
                out[i] = it->get<bool>();
            } else if (it->is_number_integer()) {
                out[i] = it->get<long long>() != 0;
            } else {
                reason = "label '" + std::string(kSubjectNames[i]) + "' is not boolean";
                return false;
            }
        }
        return true;
    }
    reason = "labels must be a list of names or an object of booleans";
    return false;
}

inline bool parse_intensity(const nlohmann::json& obj, const std::string& key, IntensityLevel& out,
                            std::string& reason) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) {
        reason = "missing or non-integer " + key;
        return false;
    }
    auto level = intensity_from_int(it->get<long long>());
    if (!level) {
        reason = key + " must be 0, 1 or 2";
        return false;
    }
    out = *level;
    return true;
}

}  // namespace detail

/// Loads posts carrying gold labels. Lines without labels or intensity, or
/// whose labels break the work-implies-health rule, land in the skip report.
inline AnnotatedCollection load_annotated(std::istream& in, const PostSchema& schema = {}) {
    auto make = [&schema](Post p, const nlohmann::json& obj, std::string& reason) -> std::optional<AnnotatedPost> {
        AnnotatedPost a;
        a.post = std::move(p);
        auto lab = obj.find(schema.labels);
        if (lab == obj.end()) {
            reason = "missing " + schema.labels;
            return std::nullopt;
        }
        if (!detail::parse_labels(*lab, a.soa, reason)) return std::nullopt;
        if (!detail::parse_intensity(obj, schema.intensity, a.intensity, reason)) return std::nullopt;
        if (a.soa[Subject::kWork] && !a.soa[Subject::kHealth]) {
            reason = "work label without health label";
            return std::nullopt;
        }
        if (auto rs = obj.find(schema.ratings); rs != obj.end() && !rs->is_null()) {
            if (!rs->is_array()) {
                reason = schema.ratings + " must be a list";
                return std::nullopt;
            }
            for (const auto& r : *rs) {
                RaterAnnotation ra;
                if (!r.is_object()) {
                    reason = "rating is not an object";
                    return std::nullopt;
                }
                ra.rater_id = r.value("rater", std::string{});
                auto rl = r.find("labels");
                if (rl == r.end()) {
                    reason = "rating without labels";
                    return std::nullopt;
                }
                if (!detail::parse_labels(*rl, ra.soa, reason)) return std::nullopt;
                if (!detail::parse_intensity(r, "intensity", ra.intensity, reason)) return std::nullopt;
                a.ratings.push_back(std::move(ra));
            }
        }
        return a;
    };
    return detail::ingest_lines<AnnotatedPost>(in, schema, make);
}

inline AnnotatedCollection load_annotated(const std::filesystem::path& path, const PostSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read annotation file: " + path.string());
    return load_annotated(in, schema);
}

/// Skip report as CSV: line_no,reason. Unusable lines are included.
template <typename Item>
void write_skip_report(std::ostream& out, const Ingested<Item>& c) {
    std::vector<SkipEntry> all = c.skipped;
    all.insert(all.end(), c.unusable.begin(), c.unusable.end());
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.line_no < b.line_no; });
    out << "line_no,reason\n";
    for (const auto& e : all) {
        std::string r = e.reason;
        std::replace(r.begin(), r.end(), '"', '\'');
        out << e.line_no << ",\"" << r << "\"\n";
    }
}

// ---------------------------------------------------------------------------
// Bucketing and sampling
// ---------------------------------------------------------------------------

/// Groups items by UTC period; `time_of` returns epoch seconds for an item.
template <typename T, typename TimeOf>
std::map<PeriodKey, std::vector<T>> bucket_by(std::span<const T> items, Granularity g, TimeOf time_of) {
    std::map<PeriodKey, std::vector<T>> out;
    for (const T& item : items) out[period_of(time_of(item), g)].push_back(item);
    return out;
}

inline std::map<PeriodKey, std::vector<Post>> bucket_by_period(std::span<const Post> posts, Granularity g) {
    return bucket_by(posts, g, [](const Post& p) { return p.created_utc; });
}

struct SampleResult {
    std::vector<Post> posts;
    /// Month strata with fewer than per_month posts (all of them were returned).
    std::vector<PeriodKey> undersized;
    std::vector<std::string> warnings;
};

/// Draws per_month posts uniformly without replacement from each month.
/// `merge` lists groups of months pooled into one stratum keyed by the
/// group's earliest month.
inline SampleResult stratified_sample(std::span<const Post> posts, std::size_t per_month, std::uint64_t seed,
                                      const std::vector<std::vector<PeriodKey>>& merge = {}) {
    if (per_month < 1) throw ValidationError("per_month must be >= 1");
    SampleResult result;
    if (posts.empty()) {
        result.warnings.push_back("empty collection; nothing sampled");
        return result;
    }
    std::map<PeriodKey, PeriodKey> alias;
    for (const auto& group : merge) {
        if (group.empty()) continue;
        const PeriodKey head = *std::min_element(group.begin(), group.end());
        for (const auto& m : group) alias[m] = head;
    }
    std::map<PeriodKey, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        PeriodKey k = period_of(posts[i].created_utc, Granularity::kMonth);
        if (auto it = alias.find(k); it != alias.end()) k = it->second;
        strata[k].push_back(i);
    }
    for (auto& [month, idx] : strata) {
        if (idx.size() < per_month) {
            result.undersized.push_back(month);
        } else {
            Rng rng(derive_seed(seed, month.to_string()));
            // Partial Fisher-Yates: the first per_month slots become the sample.
            for (std::size_t i = 0; i < per_month; ++i) {
                std::size_t j = i + uniform_index(rng, idx.size() - i);
                std::swap(idx[i], idx[j]);
            }
            idx.resize(per_month);
            std::sort(idx.begin(), idx.end());
        }
        for (std::size_t i : idx) result.posts.push_back(posts[i]);
    }
    return result;
}

/// Per-month corpus statistics: posts, distinct authors, posts per author.
struct MonthStats {
    PeriodKey month;
    std::size_t posts = 0;
    std::size_t users = 0;
    double posts_per_user() const { return users == 0 ? 0.0 : static_cast<double>(posts) / users; }
};

inline std::vector<MonthStats> month_stats(std::span<const Post> posts) {
    std::vector<MonthStats> out;
    for (const auto& [month, bucket] : bucket_by_period(posts, Granularity::kMonth)) {
        std::set<std::string> users;
        for (const auto& p : bucket) users.insert(p.author_id);
        out.push_back({month, bucket.size(), users.size()});
    }
    return out;
}

}  // namespace soa
