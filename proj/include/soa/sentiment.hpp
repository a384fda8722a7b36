// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "soa/error.hpp"
#include "soa/text.hpp"

namespace soa {

/// Valence lexicon plus the booster and negator word lists.
struct SentimentLexicon {
    std::unordered_map<std::string, double> valence;
    std::unordered_map<std::string, double> boosters;
    std::unordered_set<std::string> negators;
    std::vector<std::string> warnings;
};

struct SentimentScores {
    double pos = 0.0;
    double neg = 0.0;
    double neu = 1.0;
    double compound = 0.0;
};

/// Rule constants; defaults follow the reference VADER implementation.
struct SentimentRules {
    double negation_scalar = -0.74;
    std::size_t negation_window = 3;
    std::array<double, 3> booster_distance_scale{1.0, 0.95, 0.9};
    double caps_increment = 0.733;
    double exclamation_increment = 0.292;
    int max_exclamations = 3;
    double alpha = 15.0;
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads `token<TAB>valence[<TAB>...]` lines; extra columns are ignored so
/// the original VADER distribution file loads unchanged.
inline SentimentLexicon load_lexicon(std::istream& in) {
    SentimentLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError("lexicon line " + std::to_string(line_no) + ": expected token<TAB>valence");
        }
        std::string token = line.substr(0, tab);
        const auto tab2 = line.find('\t', tab + 1);
        const std::string field = detail::trim_copy(line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1));
        double v = 0.0;
        if (token.empty() || !detail::parse_double(field, v)) {
            throw DataError("lexicon line " + std::to_string(line_no) + ": unparsable valence '" + field + "'");
        }
        if (v < -4.0 || v > 4.0) {
            throw DataError("lexicon line " + std::to_string(line_no) + ": valence outside [-4, 4]");
        }
        auto [it, inserted] = lex.valence.insert_or_assign(std::move(token), v);
        if (!inserted) {
            lex.warnings.push_back("lexicon line " + std::to_string(line_no) + ": duplicate token '" + it->first +
                                   "', last entry wins");
        }
    }
    if (lex.valence.empty()) lex.warnings.push_back("lexicon is empty");
    return lex;
}

inline SentimentLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read lexicon: " + path.string());
    return load_lexicon(in);
}

inline constexpr double kDefaultBoost = 0.293;

/// One booster per line, optionally `token<TAB>increment` (default +0.293;
/// dampeners carry a negative increment).
inline std::unordered_map<std::string, double> load_boosters(std::istream& in) {
    std::unordered_map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        double inc = kDefaultBoost;
        if (tab != std::string::npos) {
            const std::string field = detail::trim_copy(line.substr(tab + 1));
            if (!detail::parse_double(field, inc) || inc < -1.0 || inc > 1.0) {
                throw DataError("booster line " + std::to_string(line_no) + ": increment must be a number in [-1, 1]");
            }
            line.resize(tab);
        }
        out[line] = inc;
    }
    return out;
}

inline std::unordered_set<std::string> load_negators(std::istream& in) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() != '#') out.insert(line);
    }
    return out;
}

/// Loads the valence file and, when the paths are non-empty, the booster and
/// negator lists.
inline SentimentLexicon load_lexicon(const std::filesystem::path& valence, const std::filesystem::path& boosters,
                                     const std::filesystem::path& negators) {
    SentimentLexicon lex = load_lexicon(valence);
    if (!boosters.empty()) {
        std::ifstream in(boosters);
        if (!in) throw DataError("cannot read booster list: " + boosters.string());
        lex.boosters = load_boosters(in);
    }
    if (!negators.empty()) {
        std::ifstream in(negators);
        if (!in) throw DataError("cannot read negator list: " + negators.string());
        lex.negators = load_negators(in);
    }
    return lex;
}

namespace detail {

struct SentimentWord {
    std::string raw;
    std::string lower;
};

inline bool is_edge_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

/// Whitespace split with surrounding ASCII punctuation stripped; case kept.
inline std::vector<SentimentWord> sentiment_words(std::string_view text) {
    std::vector<SentimentWord> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !detail::is_space(text[j])) ++j;
        std::size_t b = i, e = j;
        while (b < e && is_edge_punct(text[b])) ++b;
        while (e > b && is_edge_punct(text[e - 1])) --e;
        if (e > b) {
            SentimentWord w;
            w.raw = std::string(text.substr(b, e - b));
            w.lower = w.raw;
            for (char& c : w.lower) {
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            }
            out.push_back(std::move(w));
        }
        i = j;
    }
    return out;
}

inline bool is_all_caps(std::string_view w) {
    bool alpha = false;
    for (char c : w) {
        if (c >= 'a' && c <= 'z') return false;
        if (c >= 'A' && c <= 'Z') alpha = true;
    }
    return alpha;
}

inline int trailing_exclamations(std::string_view text) {
    int n = 0;
    for (std::size_t i = text.size(); i > 0; --i) {
        const char c = text[i - 1];
        if (c == '!') {
            ++n;
        } else if (!detail::is_space(c) && !is_edge_punct(c)) {
            break;
        }
    }
    return n;
}

}  // namespace detail

/// Per-token adjusted valences (zero for non-sentiment tokens) and the
/// trailing-exclamation emphasis; the building blocks of score().
struct ValenceTrace {
    std::vector<double> valences;
    double emphasis = 0.0;
};

inline ValenceTrace trace_valence(std::string_view text, const SentimentLexicon& lex,
                                  const SentimentRules& rules = {}) {
    const auto words = detail::sentiment_words(text);
    ValenceTrace trace;
    trace.valences.assign(words.size(), 0.0);

    std::size_t caps = 0;
    for (const auto& w : words) caps += detail::is_all_caps(w.raw) ? 1 : 0;
    // Capitalization only signals emphasis when some, not all, words are caps.
    const bool cap_differential = caps > 0 && caps < words.size();

    auto is_negator = [&](const std::string& w) {
        return lex.negators.contains(w) || w.find("n't") != std::string::npos;
    };

    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto& w = words[i];
        if (lex.boosters.contains(w.lower)) continue;
        auto it = lex.valence.find(w.lower);
        if (it == lex.valence.end() || it->second == 0.0) continue;
        double v = it->second;
        if (cap_differential && detail::is_all_caps(w.raw)) v += v > 0 ? rules.caps_increment : -rules.caps_increment;

        const std::size_t window = std::min({rules.negation_window, i, rules.booster_distance_scale.size()});
        for (std::size_t j = 1; j <= window; ++j) {
            auto b = lex.boosters.find(words[i - j].lower);
            if (b == lex.boosters.end()) continue;
            const double inc = v < 0 ? -b->second : b->second;
            v += inc * rules.booster_distance_scale[j - 1];
        }
        for (std::size_t j = 1; j <= std::min(rules.negation_window, i); ++j) {
            if (is_negator(words[i - j].lower)) v *= rules.negation_scalar;
        }
        trace.valences[i] = v;
    }
    const int bangs = std::min(detail::trailing_exclamations(text), rules.max_exclamations);
    trace.emphasis = bangs * rules.exclamation_increment;
    return trace;
}

inline double normalize_compound(double sum, double alpha = 15.0) { return sum / std::sqrt(sum * sum + alpha); }

/// Lexicon-and-rules sentiment for a whole text.
inline SentimentScores score(std::string_view text, const SentimentLexicon& lex, const SentimentRules& rules = {}) {
    const ValenceTrace trace = trace_valence(text, lex, rules);
    if (trace.valences.empty()) return {};

    double sum = 0.0, pos_sum = 0.0, neg_sum = 0.0, neu = 0.0;
    for (double v : trace.valences) {
        sum += v;
        if (v > 0) {
            pos_sum += v + 1.0;
        } else if (v < 0) {
            neg_sum += v - 1.0;
        } else {
            neu += 1.0;
        }
    }
    if (sum > 0) {
        sum += trace.emphasis;
    } else if (sum < 0) {
        sum -= trace.emphasis;
    }
    if (pos_sum > std::fabs(neg_sum)) {
        pos_sum += trace.emphasis;
    } else if (pos_sum < std::fabs(neg_sum)) {
        neg_sum -= trace.emphasis;
    }
    const double total = pos_sum + std::fabs(neg_sum) + neu;
    SentimentScores s;
    s.pos = pos_sum / total;
    s.neg = std::fabs(neg_sum) / total;
    s.neu = neu / total;
    s.compound = normalize_compound(sum, rules.alpha);
    return s;
}

}  // namespace soa
