// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "soa/random.hpp"
#include "soa/sentiment.hpp"

using Catch::Approx;

namespace {

soa::SentimentLexicon tiny_lexicon() {
    std::istringstream in("good\t1.9\nbad\t-2.5\nhappy\t2.7\nsad\t-2.1\n");
    auto lex = soa::load_lexicon(in);
    lex.boosters = {{"very", 0.293}, {"barely", -0.293}};
    lex.negators = {"not", "never"};
    return lex;
}

const soa::SentimentLexicon& shipped() {
    static const auto lex = soa::load_lexicon(std::string(SOA_DATA_DIR) + "/vader_lexicon.tsv",
                                              std::string(SOA_DATA_DIR) + "/boosters.tsv",
                                              std::string(SOA_DATA_DIR) + "/negators.txt");
    return lex;
}

}  // namespace

TEST_CASE("lexicon parsing", "[sentiment]") {
    std::istringstream ok("good\t1.9\n");
    CHECK(soa::load_lexicon(ok).valence.at("good") == 1.9);

    std::istringstream empty("");
    const auto e = soa::load_lexicon(empty);
    CHECK(e.valence.empty());
    CHECK_FALSE(e.warnings.empty());

    std::istringstream bad("bad\tx\n");
    try {
        soa::load_lexicon(bad);
        FAIL("expected a parse error");
    } catch (const soa::DataError& err) {
        CHECK_THAT(err.what(), Catch::Matchers::ContainsSubstring("line 1"));
    }

    std::istringstream range("huge\t7\n");
    CHECK_THROWS_AS(soa::load_lexicon(range), soa::DataError);

    std::istringstream dup("good\t1.0\ngood\t2.0\n");
    const auto d = soa::load_lexicon(dup);
    CHECK(d.valence.at("good") == 2.0);
    CHECK(d.warnings.size() == 1);
}

TEST_CASE("shipped lexicon files load", "[sentiment]") {
    const auto& lex = shipped();
    CHECK(lex.valence.size() > 7000);
    CHECK(lex.valence.at("good") == 1.9);
    CHECK(lex.boosters.at("very") == Approx(0.293));
    CHECK(lex.boosters.at("barely") == Approx(-0.293));
    CHECK(lex.negators.contains("never"));
}

TEST_CASE("compound normalization hand oracles", "[sentiment]") {
    const auto lex = tiny_lexicon();
    // 1.9 / sqrt(1.9^2 + 15)
    CHECK(soa::score("good", lex).compound == Approx(0.4404).margin(1e-4));
    // -0.74 * 1.9 = -1.406; -1.406 / sqrt(1.406^2 + 15)
    CHECK(soa::score("not good", lex).compound == Approx(-0.3412).margin(1e-4));
    CHECK(soa::score("good", shipped()).compound == Approx(0.4404).margin(1e-4));
}

TEST_CASE("no lexicon hits is neutral", "[sentiment]") {
    const auto s = soa::score("the table is wooden", tiny_lexicon());
    CHECK(s.pos == 0.0);
    CHECK(s.neg == 0.0);
    CHECK(s.neu == 1.0);
    CHECK(s.compound == 0.0);
    const auto empty = soa::score("", tiny_lexicon());
    CHECK(empty.neu == 1.0);
    CHECK(empty.compound == 0.0);
}

TEST_CASE("booster, caps and exclamation rules", "[sentiment]") {
    const auto lex = tiny_lexicon();
    const double base = soa::score("good", lex).compound;
    CHECK(soa::score("very good", lex).compound == Approx(soa::normalize_compound(1.9 + 0.293)));
    CHECK(soa::score("barely good", lex).compound == Approx(soa::normalize_compound(1.9 - 0.293)));
    CHECK(soa::score("very bad", lex).compound == Approx(soa::normalize_compound(-2.5 - 0.293)));
    // Distance two scales the increment by 0.95.
    CHECK(soa::score("very the good", lex).compound == Approx(soa::normalize_compound(1.9 + 0.95 * 0.293)));
    CHECK(soa::score("it is GOOD", lex).compound == Approx(soa::normalize_compound(1.9 + 0.733)));
    // All words in caps: no differential, no increment.
    CHECK(soa::score("GOOD", lex).compound == Approx(base));
    CHECK(soa::score("good!!", lex).compound == Approx(soa::normalize_compound(1.9 + 2 * 0.292)));
    CHECK(soa::score("good!!!!!!", lex).compound == Approx(soa::normalize_compound(1.9 + 3 * 0.292)));
    CHECK(soa::score("bad!", lex).compound == Approx(soa::normalize_compound(-2.5 - 0.292)));
}

TEST_CASE("negation window and contractions", "[sentiment]") {
    const auto lex = tiny_lexicon();
    CHECK(soa::score("not the very good", lex).compound < 0);
    // Four tokens back is outside the window.
    CHECK(soa::score("not a b c good", lex).compound > 0);
    CHECK(soa::score("isn't good", lex).compound == Approx(soa::score("not good", lex).compound));
}

TEST_CASE("proportions sum to one and compound stays bounded", "[sentiment][property]") {
    const auto& lex = shipped();
    const std::vector<std::string> pool{"good", "bad", "not",  "very", "HAPPY", "sad", "table", "never",
                                        "love", "hate", "kind", "the",  "awful", "ok",  "barely", "!"};
    soa::Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const auto len = 1 + soa::uniform_index(rng, 12);
        for (std::size_t i = 0; i < len; ++i) text += pool[soa::uniform_index(rng, pool.size())] + " ";
        const auto s = soa::score(text, lex);
        CHECK(s.pos >= 0.0);
        CHECK(s.neg >= 0.0);
        CHECK(s.neu >= 0.0);
        CHECK(s.pos + s.neg + s.neu == Approx(1.0).margin(1e-6));
        CHECK(std::fabs(s.compound) < 1.0);
    }
}

TEST_CASE("compound is odd under valence negation", "[sentiment][property]") {
    const auto lex = tiny_lexicon();
    auto flipped = lex;
    for (auto& [k, v] : flipped.valence) v = -v;
    for (const char* text : {"good", "not good", "very bad and happy", "SAD but good!!", "never very happy"}) {
        CHECK(soa::score(text, flipped).compound == Approx(-soa::score(text, lex).compound).margin(1e-9));
    }
}

TEST_CASE("a booster before a sentiment token moves compound away from zero", "[sentiment][property]") {
    const auto lex = tiny_lexicon();
    for (const char* word : {"good", "happy"}) {
        CHECK(soa::score(std::string("very ") + word, lex).compound >= soa::score(word, lex).compound);
    }
    for (const char* word : {"bad", "sad"}) {
        CHECK(soa::score(std::string("very ") + word, lex).compound <= soa::score(word, lex).compound);
    }
}
