// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

// Synthetic corpora with planted keyword signals, shared by the unit tests and
// the acceptance suite.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soa/corpus.hpp"
#include "soa/labels.hpp"
#include "soa/random.hpp"

namespace soa::synth {

/// Positive rates per SOA (canonical order) and for intensity level 2.
inline constexpr std::array<double, kNumSubjects> kPlantedPriors = {0.13, 0.23, 0.48, 0.21, 0.06,
                                                                  0.22, 0.08, 0.06, 0.13};
inline constexpr double kPlantedIntensityPrior = 0.36;

/// Three keywords per SOA; the sets are pairwise disjoint.
inline const std::array<std::array<std::string, 3>, kNumSubjects>& keyword_sets() {
    static const std::array<std::array<std::string, 3>, kNumSubjects> sets = {{
        {"rent", "paycheck", "savings"},
        {"lockdown", "curfew", "closure"},
        {"fever", "symptoms", "infected"},
        {"maskless", "distancing", "ignoring"},
        {"coworkers", "office", "layoffs"},
        {"therapy", "depression", "loneliness"},
        {"funeral", "dying", "grief"},
        {"flight", "airport", "trip"},
        {"someday", "uncertain", "plans"},
    }};
    return sets;
}

inline const std::array<std::string, 3>& intensity_keywords() {
    static const std::array<std::string, 3> k = {"terrified", "panicking", "hopeless"};
    return k;
}

/// Alternative "guide" vocabulary used after a drift point.
inline const std::array<std::string, 3>& drifted_guide_keywords() {
    static const std::array<std::string, 3> k = {"antimask", "gatherings", "partygoers"};
    return k;
}

/// Deterministic pronounceable filler words that collide with no keyword.
inline std::vector<std::string> filler_words(std::size_t n = 300) {
    static constexpr const char* kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
    static constexpr const char* kVowel[] = {"a", "e", "i", "o", "u"};
    std::vector<std::string> out;
    for (std::size_t i = 0; out.size() < n; ++i) {
        std::string w;
        std::size_t x = i;
        for (int syl = 0; syl < 3; ++syl) {
            w += kOnset[x % 14];
            x /= 14;
            w += kVowel[x % 5];
            x /= 5;
        }
        out.push_back(w);
    }
    return out;
}

struct PlantedSpec {
    std::size_t n_posts = 2000;
    std::array<double, kNumSubjects> priors = kPlantedPriors;
    double intensity_prior = kPlantedIntensityPrior;
    /// Fraction of each label's positives that carry none of its keywords.
    double label_noise = 0.0;
    std::uint64_t seed = 1;
    /// Posts are spread uniformly over [first_day, first_day + days).
    std::chrono::sys_days first_day{std::chrono::year{2020} / 2 / 1};
    int days = 270;
    /// When set, "guide" posts dated on or after this day use the drifted vocabulary.
    std::optional<std::chrono::sys_days> guide_drift_from;
    std::size_t filler_per_post = 30;
};

namespace detail {

inline std::string sentence_join(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out += (i % 9 == 0) ? ". " : " ";
        out += words[i];
    }
    return out + ".";
}

}  // namespace detail

/// Multi-label posts where every positive label contributes two keyword draws
/// from its set (unless the post was chosen as label noise). Work positives
/// are always health positives as well.
inline std::vector<AnnotatedPost> planted_corpus(const PlantedSpec& spec) {
    Rng rng(spec.seed);
    const auto filler = filler_words();
    const auto& sets = keyword_sets();
    const auto health = static_cast<std::size_t>(Subject::kHealth);
    const auto work = static_cast<std::size_t>(Subject::kWork);
    const auto guide = static_cast<std::size_t>(Subject::kGuide);

    std::vector<AnnotatedPost> posts(spec.n_posts);
    for (std::size_t i = 0; i < spec.n_posts; ++i) {
        auto& p = posts[i];
        for (std::size_t s = 0; s < kNumSubjects; ++s) {
            if (s == work) continue;
            p.soa[s] = bernoulli(rng, spec.priors[s]);
        }
        p.soa[work] = p.soa[health] && bernoulli(rng, spec.priors[work] / spec.priors[health]);
        p.intensity = bernoulli(rng, spec.intensity_prior)
                          ? IntensityLevel::kExtreme
                          : (bernoulli(rng, 0.5) ? IntensityLevel::kMild : IntensityLevel::kNone);
        const auto day = spec.first_day + std::chrono::days{static_cast<int>(uniform_index(rng, spec.days))};
        p.post.created_utc = epoch_seconds(day) + static_cast<std::int64_t>(uniform_index(rng, 86400));
        p.post.id = "p" + std::to_string(i);
        p.post.author_id = "u" + std::to_string(uniform_index(rng, spec.n_posts / 2 + 1));
    }

    // Exactly round(noise * positives) positives of each label lose their keywords.
    std::vector<std::array<bool, kNumSubjects + 1>> silent(spec.n_posts);
    for (std::size_t s = 0; s <= kNumSubjects; ++s) {
        std::vector<std::size_t> pos;
        for (std::size_t i = 0; i < spec.n_posts; ++i) {
            const bool on = s < kNumSubjects ? posts[i].soa[s] : combine_intensity_labels(posts[i].intensity);
            if (on) pos.push_back(i);
        }
        shuffle(std::span<std::size_t>(pos), rng);
        const auto k = static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(pos.size())));
        for (std::size_t j = 0; j < k; ++j) silent[pos[j]][s] = true;
    }

    for (std::size_t i = 0; i < spec.n_posts; ++i) {
        auto& p = posts[i];
        std::vector<std::string> words;
        for (std::size_t w = 0; w < spec.filler_per_post; ++w) words.push_back(filler[uniform_index(rng, filler.size())]);
        auto plant = [&](const std::array<std::string, 3>& set) {
            for (int r = 0; r < 2; ++r) {
                const auto at = uniform_index(rng, words.size() + 1);
                words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), set[uniform_index(rng, 3)]);
            }
        };
        for (std::size_t s = 0; s < kNumSubjects; ++s) {
            if (!p.soa[s] || silent[i][s]) continue;
            const bool drifted = s == guide && spec.guide_drift_from && utc_day(p.post.created_utc) >= *spec.guide_drift_from;
            plant(drifted ? drifted_guide_keywords() : sets[s]);
        }
        if (combine_intensity_labels(p.intensity) && !silent[i][kNumSubjects]) plant(intensity_keywords());
        p.post.title = words[0] + " " + words[1];
        words.erase(words.begin(), words.begin() + 2);
        p.post.body = detail::sentence_join(words);
    }
    return posts;
}

inline std::vector<Post> posts_of(const std::vector<AnnotatedPost>& a) {
    std::vector<Post> out;
    out.reserve(a.size());
    for (const auto& p : a) out.push_back(p.post);
    return out;
}

/// Documents drawn from `topics` disjoint vocabularies, one topic per document.
struct PlantedTopics {
    std::vector<std::vector<std::string>> docs;
    std::vector<int> topic_of;
    std::vector<std::string> vocab;
};

inline PlantedTopics planted_topics(int topics, std::size_t docs_per_topic, std::size_t words_per_topic,
                                    std::size_t doc_len, std::uint64_t seed) {
    PlantedTopics out;
    const auto words = filler_words(static_cast<std::size_t>(topics) * words_per_topic);
    out.vocab = words;
    Rng rng(seed);
    for (int t = 0; t < topics; ++t) {
        for (std::size_t d = 0; d < docs_per_topic; ++d) {
            std::vector<std::string> doc;
            for (std::size_t i = 0; i < doc_len; ++i) {
                doc.push_back(words[static_cast<std::size_t>(t) * words_per_topic + uniform_index(rng, words_per_topic)]);
            }
            out.docs.push_back(std::move(doc));
            out.topic_of.push_back(t);
        }
    }
    return out;
}

inline nlohmann::json post_json(const Post& p) {
    return {{"id", p.id}, {"author", p.author_id}, {"title", p.title}, {"selftext", p.body}, {"created_utc", p.created_utc}};
}

/// Writes posts in the default dump schema, one JSON object per line.
inline void write_posts_jsonl(const std::filesystem::path& path, const std::vector<Post>& posts) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& p : posts) out << post_json(p).dump() << '\n';
}

inline void write_annotated_jsonl(const std::filesystem::path& path, const std::vector<AnnotatedPost>& posts) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& a : posts) {
        auto j = post_json(a.post);
        j["labels"] = nlohmann::json::array();
        for (std::size_t s = 0; s < kNumSubjects; ++s) {
            if (a.soa[s]) j["labels"].push_back(std::string(kSubjectNames[s]));
        }
        j["intensity"] = static_cast<int>(a.intensity);
        out << j.dump() << '\n';
    }
}

}  // namespace soa::synth
