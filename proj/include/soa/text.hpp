// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "soa/error.hpp"

namespace soa {

struct TokenStream {
    std::vector<std::string> tokens;
    std::size_t sentence_count = 0;
    std::size_t word_count = 0;
};

using StopwordSet = std::unordered_set<std::string>;

struct NgramConfig {
    std::vector<int> orders{1, 2, 3};
    StopwordSet stopwords;
};

namespace detail {

/// Decodes one UTF-8 code point at text[i], advancing i. Invalid bytes decode
/// as U+FFFD and consume a single byte.
inline char32_t next_code_point(std::string_view text, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= text.size()) return -1;
        const auto b = static_cast<unsigned char>(text[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
    if (len == 0) {
        ++i;
        return 0xFFFD;
    }
    char32_t cp = b0 & (0x7F >> len);
    for (int k = 1; k < len; ++k) {
        int c = cont(k);
        if (c < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    i += len;
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_alpha(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }

/// Approximate letter test for non-ASCII code points: everything from
/// U+00C0 up counts except known punctuation, symbol, emoji and
/// private-use blocks.
inline bool is_word_char(char32_t c) {
    if (c < 0x80) return is_ascii_alpha(c) || is_ascii_digit(c);
    if (c < 0xC0 || c == 0xD7 || c == 0xF7 || c == 0xFFFD) return false;
    if (c >= 0x2000 && c <= 0x2BFF) return false;
    if (c >= 0x3000 && c <= 0x303F) return false;
    if (c >= 0xE000 && c <= 0xF8FF) return false;
    if (c >= 0xFE00 && c <= 0xFE0F) return false;
    if (c >= 0xFF00 && c <= 0xFF20) return false;
    if (c >= 0x1F000 && c <= 0x1FAFF) return false;
    return true;
}

inline bool is_letter(char32_t c) { return is_word_char(c) && !is_ascii_digit(c); }

inline bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

inline char32_t to_lower(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if (c >= 0x391 && c <= 0x3A9) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

inline bool is_terminal(char32_t c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace detail

/// Splits text into lowercased word tokens and counts sentences.
///
/// Tokens are maximal runs of letters and digits; an apostrophe is kept when
/// it sits between two word characters (curly apostrophes normalize to ').
/// A sentence ends at a run of '.', '!' or '?' (a '.' between two digits
/// does not count) or at end of text, and is counted only if it holds a word.
inline TokenStream tokenize(std::string_view text) {
    std::vector<char32_t> cps;
    cps.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) cps.push_back(detail::next_code_point(text, i));

    TokenStream out;
    std::string current;
    bool sentence_has_word = false;
    auto flush = [&] {
        if (!current.empty()) {
            out.tokens.push_back(std::move(current));
            current.clear();
            sentence_has_word = true;
        }
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (detail::is_word_char(c)) {
            detail::append_utf8(current, detail::to_lower(c));
            continue;
        }
        if (detail::is_apostrophe(c) && !current.empty() && i + 1 < cps.size() && detail::is_word_char(cps[i + 1])) {
            current.push_back('\'');
            continue;
        }
        const bool decimal_point = c == '.' && i > 0 && i + 1 < cps.size() && detail::is_ascii_digit(cps[i - 1]) &&
                                   detail::is_ascii_digit(cps[i + 1]);
        flush();
        if (detail::is_terminal(c) && !decimal_point && sentence_has_word) {
            ++out.sentence_count;
            sentence_has_word = false;
        }
    }
    flush();
    if (sentence_has_word) ++out.sentence_count;
    out.word_count = out.tokens.size();
    return out;
}

/// Stopwords removed, then every contiguous n-gram for each configured order,
/// words joined by one space.
inline std::vector<std::string> ngrams(std::span<const std::string> tokens, const NgramConfig& config) {
    std::vector<const std::string*> kept;
    kept.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!config.stopwords.contains(t)) kept.push_back(&t);
    }
    std::vector<int> orders = config.orders;
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

    std::vector<std::string> out;
    for (int n : orders) {
        if (n < 1) throw ValidationError("n-gram order must be >= 1");
        const auto un = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + un <= kept.size(); ++i) {
            std::string g = *kept[i];
            for (std::size_t k = 1; k < un; ++k) {
                g.push_back(' ');
                g += *kept[i + k];
            }
            out.push_back(std::move(g));
        }
    }
    return out;
}

inline std::vector<std::string> ngrams(const TokenStream& stream, const NgramConfig& config) {
    return ngrams(std::span<const std::string>(stream.tokens), config);
}

/// Heuristic syllable count: maximal groups of a/e/i/o/u/y, minus one for a
/// trailing 'e' when at least one other group remains. Approximate by
/// construction; always >= 1.
inline int syllables(std::string_view word) {
    std::string letters;
    bool any = false;
    for (std::size_t i = 0; i < word.size();) {
        const char32_t c = detail::next_code_point(word, i);
        if (detail::is_apostrophe(c)) continue;
        if (!detail::is_letter(c)) {
            throw ValidationError("syllables: word '" + std::string(word) + "' is not alphabetic");
        }
        any = true;
        const char32_t lc = detail::to_lower(c);
        letters.push_back(lc < 0x80 ? static_cast<char>(lc) : '#');
    }
    if (!any) throw ValidationError("syllables: empty word");

    auto is_vowel = [](char c) { return std::string_view("aeiouy").find(c) != std::string_view::npos; };
    int groups = 0;
    bool in_group = false;
    for (char c : letters) {
        const bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (letters.back() == 'e' && groups > 1) --groups;
    return std::max(groups, 1);
}

inline constexpr double kFleschBase = 206.835;
inline constexpr double kFleschSentenceWeight = 1.015;
inline constexpr double kFleschSyllableWeight = 84.6;

/// Syllables for a token that may contain digits: letters only; a token with
/// no letters (a number) counts as one syllable.
inline int token_syllables(std::string_view token) {
    std::string letters;
    for (std::size_t i = 0; i < token.size();) {
        const std::size_t start = i;
        const char32_t c = detail::next_code_point(token, i);
        if (detail::is_letter(c)) letters.append(token.substr(start, i - start));
    }
    return letters.empty() ? 1 : syllables(letters);
}

inline double flesch_reading_ease(const TokenStream& stream) {
    if (stream.word_count == 0) throw ValidationError("flesch: text has no words and cannot be scored");
    long total = 0;
    for (const auto& t : stream.tokens) total += token_syllables(t);
    const double words = static_cast<double>(stream.word_count);
    const double sentences = static_cast<double>(std::max<std::size_t>(stream.sentence_count, 1));
    return kFleschBase - kFleschSentenceWeight * (words / sentences) -
           kFleschSyllableWeight * (static_cast<double>(total) / words);
}

inline double flesch_reading_ease(std::string_view text) { return flesch_reading_ease(tokenize(text)); }

/// One token per line; blank lines and lines starting with '#' are ignored.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read stopword file: " + path.string());
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        out.insert(line);
    }
    return out;
}

}  // namespace soa
