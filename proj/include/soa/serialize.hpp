// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soa/analysis.hpp"
#include "soa/error.hpp"
#include "soa/features.hpp"
#include "soa/linear.hpp"
#include "soa/protocols.hpp"

namespace soa {

using nlohmann::json;

namespace detail {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("artifact: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(std::string("artifact: bad field '") + key + "': " + e.what());
    }
}

template <typename Map>
json sorted_object(const Map& m) {
    std::map<std::string, typename Map::mapped_type> sorted(m.begin(), m.end());
    return json(sorted);
}

template <typename Set>
std::vector<std::string> sorted_list(const Set& s) {
    std::vector<std::string> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace detail

inline json to_json(const LinearConfig& c) {
    return {{"loss", std::string(loss_name(c.loss))},
            {"lambda", c.lambda},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"logistic_eta0", c.logistic_eta0}};
}

inline LinearConfig linear_config_from_json(const json& j) {
    LinearConfig c;
    c.loss = loss_from_name(detail::require<std::string>(j, "loss"));
    c.lambda = detail::require<double>(j, "lambda");
    c.epochs = detail::require<int>(j, "epochs");
    c.seed = detail::require<std::uint64_t>(j, "seed");
    c.logistic_eta0 = detail::require<double>(j, "logistic_eta0");
    return c;
}

inline json to_json(const LinearModel& m) {
    return {{"label", m.label_name}, {"config", to_json(m.config)}, {"bias", m.bias}, {"weights", m.weights}};
}

inline LinearModel linear_model_from_json(const json& j) {
    LinearModel m;
    m.label_name = detail::require<std::string>(j, "label");
    m.config = linear_config_from_json(detail::require<json>(j, "config"));
    m.bias = detail::require<double>(j, "bias");
    m.weights = detail::require<std::vector<double>>(j, "weights");
    return m;
}

inline json to_json(const LdaConfig& c) {
    json j = {{"num_topics", c.num_topics}, {"beta", c.beta},       {"iterations", c.iterations},
              {"burn_in", c.burn_in},       {"seed", c.seed},       {"infer_sweeps", c.infer_sweeps}};
    j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
    return j;
}

inline LdaConfig lda_config_from_json(const json& j) {
    LdaConfig c;
    c.num_topics = detail::require<int>(j, "num_topics");
    if (j.contains("alpha") && !j.at("alpha").is_null()) c.alpha = detail::require<double>(j, "alpha");
    c.beta = detail::require<double>(j, "beta");
    c.iterations = detail::require<int>(j, "iterations");
    c.burn_in = detail::require<int>(j, "burn_in");
    c.seed = detail::require<std::uint64_t>(j, "seed");
    c.infer_sweeps = detail::require<int>(j, "infer_sweeps");
    return c;
}

inline json to_json(const SentimentRules& r) {
    return {{"negation_scalar", r.negation_scalar},
            {"negation_window", r.negation_window},
            {"booster_distance_scale", r.booster_distance_scale},
            {"caps_increment", r.caps_increment},
            {"exclamation_increment", r.exclamation_increment},
            {"max_exclamations", r.max_exclamations},
            {"alpha", r.alpha}};
}

inline SentimentRules sentiment_rules_from_json(const json& j) {
    SentimentRules r;
    r.negation_scalar = detail::require<double>(j, "negation_scalar");
    r.negation_window = detail::require<std::size_t>(j, "negation_window");
    r.booster_distance_scale = detail::require<std::array<double, 3>>(j, "booster_distance_scale");
    r.caps_increment = detail::require<double>(j, "caps_increment");
    r.exclamation_increment = detail::require<double>(j, "exclamation_increment");
    r.max_exclamations = detail::require<int>(j, "max_exclamations");
    r.alpha = detail::require<double>(j, "alpha");
    return r;
}

/// Vocabulary, topic model, lexicon and readability scaling: everything the
/// feature extractor needs at prediction time.
inline json to_json(const FeatureBundle& b) {
    json vocab = {{"terms", b.vocab.terms},
                  {"doc_freq", b.vocab.doc_freq},
                  {"n_docs", b.vocab.n_docs},
                  {"min_df", b.vocab.config.min_df},
                  {"max_df", b.vocab.config.max_df},
                  {"ngram_orders", b.vocab.config.ngram.orders},
                  {"stopwords", detail::sorted_list(b.vocab.config.ngram.stopwords)}};
    json lda = {{"config", to_json(b.lda.config)},
                {"vocab", b.lda.vocab},
                {"topic_word", b.lda.topic_word},
                {"topic_totals", b.lda.topic_totals}};
    json lexicon = {{"valence", detail::sorted_object(b.lexicon.valence)},
                    {"boosters", detail::sorted_object(b.lexicon.boosters)},
                    {"negators", detail::sorted_list(b.lexicon.negators)}};
    return {{"vocab", vocab},
            {"lda", lda},
            {"lexicon", lexicon},
            {"sentiment_rules", to_json(b.rules)},
            {"flesch_mean", b.flesch_mean},
            {"flesch_std", b.flesch_std}};
}

inline FeatureBundle feature_bundle_from_json(const json& j) {
    FeatureBundle b;
    const json v = detail::require<json>(j, "vocab");
    b.vocab.terms = detail::require<std::vector<std::string>>(v, "terms");
    b.vocab.doc_freq = detail::require<std::vector<std::size_t>>(v, "doc_freq");
    b.vocab.n_docs = detail::require<std::size_t>(v, "n_docs");
    b.vocab.config.min_df = detail::require<double>(v, "min_df");
    b.vocab.config.max_df = detail::require<double>(v, "max_df");
    b.vocab.config.ngram.orders = detail::require<std::vector<int>>(v, "ngram_orders");
    for (auto& w : detail::require<std::vector<std::string>>(v, "stopwords")) b.vocab.config.ngram.stopwords.insert(w);
    if (b.vocab.terms.size() != b.vocab.doc_freq.size()) throw DataError("artifact: vocabulary arrays differ in length");
    for (std::size_t i = 0; i < b.vocab.terms.size(); ++i) {
        b.vocab.term_index.emplace(b.vocab.terms[i], static_cast<std::uint32_t>(i));
    }

    const json l = detail::require<json>(j, "lda");
    b.lda.config = lda_config_from_json(detail::require<json>(l, "config"));
    b.lda.vocab = detail::require<std::vector<std::string>>(l, "vocab");
    b.lda.word_index = detail::index_words(b.lda.vocab);
    b.lda.topic_word = detail::require<std::vector<std::int64_t>>(l, "topic_word");
    b.lda.topic_totals = detail::require<std::vector<std::int64_t>>(l, "topic_totals");
    const auto K = static_cast<std::size_t>(b.lda.config.num_topics);
    if (b.lda.topic_totals.size() != K || b.lda.topic_word.size() != K * b.lda.vocab.size()) {
        throw DataError("artifact: topic model arrays do not match num_topics and vocabulary");
    }

    const json lex = detail::require<json>(j, "lexicon");
    for (auto& [k, val] : detail::require<std::map<std::string, double>>(lex, "valence")) b.lexicon.valence.emplace(k, val);
    for (auto& [k, val] : detail::require<std::map<std::string, double>>(lex, "boosters")) b.lexicon.boosters.emplace(k, val);
    for (auto& w : detail::require<std::vector<std::string>>(lex, "negators")) b.lexicon.negators.insert(w);
    b.rules = sentiment_rules_from_json(detail::require<json>(j, "sentiment_rules"));
    b.flesch_mean = detail::require<double>(j, "flesch_mean");
    b.flesch_std = detail::require<double>(j, "flesch_std");
    return b;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
            {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
            {"tn", m.tn}};
}

inline json to_json(const MetricBlock& b) {
    json labels = json::array();
    for (const auto& l : b.labels) {
        json row = {{"label", l.label}, {"trained", l.trained}, {"ratio", l.ratio}, {"metrics", to_json(l.metrics)}};
        if (!l.skip_reason.empty()) row["skip_reason"] = l.skip_reason;
        if (l.cv_score) row["cv_score"] = *l.cv_score;
        labels.push_back(std::move(row));
    }
    return {{"labels", labels}, {"macro", to_json(b.macro)}, {"skipped", b.skipped}};
}

inline json to_json(const EvalReport& r) {
    return {{"protocol", r.protocol}, {"seed", r.seed},         {"n_train", r.n_train},  {"n_test", r.n_test},
            {"model", to_json(r.model)}, {"baseline", to_json(r.baseline)}, {"warnings", r.warnings}};
}

/// One row per label and block: variable, P, R, F1, ratio.
inline void write_eval_csv(std::ostream& out, const EvalReport& r) {
    out << "protocol,block,variable,P,R,F1,ratio,trained\n";
    auto block = [&](const char* name, const MetricBlock& b) {
        for (const auto& l : b.labels) {
            out << r.protocol << ',' << name << ',' << l.label << ',' << l.metrics.precision << ',' << l.metrics.recall
                << ',' << l.metrics.f1 << ',' << l.ratio << ',' << (l.trained ? 1 : 0) << '\n';
        }
        out << r.protocol << ',' << name << ",macro," << b.macro.precision << ',' << b.macro.recall << ','
            << b.macro.f1 << ",,\n";
    };
    block("model", r.model);
    block("baseline", r.baseline);
}

inline json to_json(const PredictionRow& row, const EnsemblePrediction& p, const FeatureVector& x) {
    json labels = json::object(), scores = json::object();
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        const std::string name(kSubjectNames[s]);
        labels[name] = p.soa_available[s] ? json(row.soa[s]) : json(nullptr);
        if (p.soa_available[s]) scores[name] = p.soa_scores[s];
    }
    json j = {{"id", row.id}, {"created_utc", row.created_utc}, {"labels", labels}, {"scores", scores}};
    j["intensity"] = p.intensity_available ? json(row.intensity) : json(nullptr);
    if (p.intensity_available) scores[std::string(kIntensityName)] = p.intensity_score;
    j["scores"] = scores;
    j["readability_fallback"] = x.readability_fallback;
    j["topic_fallback"] = x.topic_fallback;
    return j;
}

/// Reads one prediction line back; unavailable labels read as negative.
inline PredictionRow prediction_from_json(const json& j) {
    PredictionRow row;
    row.id = detail::require<std::string>(j, "id");
    row.created_utc = detail::require<std::int64_t>(j, "created_utc");
    const json labels = detail::require<json>(j, "labels");
    for (std::size_t s = 0; s < kNumSubjects; ++s) {
        const std::string name(kSubjectNames[s]);
        row.soa[s] = labels.contains(name) && labels.at(name).is_boolean() && labels.at(name).get<bool>();
    }
    row.intensity = j.contains("intensity") && j.at("intensity").is_boolean() && j.at("intensity").get<bool>();
    return row;
}

}  // namespace soa
