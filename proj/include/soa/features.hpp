// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "soa/error.hpp"
#include "soa/lda.hpp"
#include "soa/sentiment.hpp"
#include "soa/text.hpp"

namespace soa {

struct VocabConfig {
    double min_df = 0.0025;
    double max_df = 0.50;
    NgramConfig ngram;

    void validate() const {
        if (!(min_df >= 0.0 && min_df < max_df && max_df <= 1.0)) {
            throw ValidationError("vocab: need 0 <= min_df < max_df <= 1");
        }
        if (ngram.orders.empty()) throw ValidationError("vocab: ngram orders must be non-empty");
    }

    /// Smallest document count a kept term may have.
    std::size_t min_count(std::size_t n_docs) const {
        return static_cast<std::size_t>(std::ceil(min_df * static_cast<double>(n_docs) - 1e-9));
    }
    /// Largest document count a kept term may have.
    std::size_t max_count(std::size_t n_docs) const {
        return static_cast<std::size_t>(std::floor(max_df * static_cast<double>(n_docs) + 1e-9));
    }
};

struct Vocabulary {
    std::vector<std::string> terms;  // index order (lexicographic)
    std::unordered_map<std::string, std::uint32_t> term_index;
    std::vector<std::size_t> doc_freq;
    std::size_t n_docs = 0;
    VocabConfig config;

    std::size_t size() const { return terms.size(); }

    double idf(std::uint32_t index) const {
        return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq[index]))) + 1.0;
    }
};

struct SparseEntry {
    std::uint32_t index = 0;
    double weight = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

using SparseBlock = std::vector<SparseEntry>;

/// Counts document frequencies over the n-grams of every document and keeps
/// the terms with min_count <= df <= max_count.
inline Vocabulary fit_vocab(std::span<const Document> docs, const VocabConfig& config) {
    config.validate();
    if (docs.empty()) throw DataError("vocab: empty corpus");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        auto grams = ngrams(std::span<const std::string>(doc), config.ngram);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (auto& g : grams) ++df[std::move(g)];
    }
    Vocabulary v;
    v.n_docs = docs.size();
    v.config = config;
    const std::size_t lo = config.min_count(docs.size());
    const std::size_t hi = config.max_count(docs.size());
    for (auto& [term, count] : df) {
        if (count < lo || count > hi) continue;
        v.term_index.emplace(term, static_cast<std::uint32_t>(v.terms.size()));
        v.terms.push_back(term);
        v.doc_freq.push_back(count);
    }
    if (v.terms.empty()) {
        throw DataError("vocab: no term survives pruning (min_df=" + std::to_string(config.min_df) +
                        ", max_df=" + std::to_string(config.max_df) + ")");
    }
    return v;
}

/// Raw count times smoothed idf, L2-normalized; out-of-vocabulary n-grams are
/// ignored and a document without hits yields an empty block.
inline SparseBlock transform_tfidf(const Vocabulary& vocab, std::span<const std::string> tokens) {
    std::map<std::uint32_t, double> counts;
    for (const auto& g : ngrams(tokens, vocab.config.ngram)) {
        if (auto it = vocab.term_index.find(g); it != vocab.term_index.end()) counts[it->second] += 1.0;
    }
    SparseBlock block;
    block.reserve(counts.size());
    double norm2 = 0.0;
    for (const auto& [idx, tf] : counts) {
        const double w = tf * vocab.idf(idx);
        block.push_back({idx, w});
        norm2 += w * w;
    }
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& e : block) e.weight *= inv;
    }
    return block;
}

/// Everything needed to turn a post into a feature vector.
struct FeatureBundle {
    Vocabulary vocab;
    SentimentLexicon lexicon;
    SentimentRules rules;
    LdaModel lda;
    double flesch_mean = 0.0;
    double flesch_std = 1.0;

    std::size_t dense_dim() const { return 3 + static_cast<std::size_t>(lda.num_topics()) + 1; }
    std::size_t total_dim() const { return vocab.size() + dense_dim(); }

    /// Human-readable name of a feature column.
    std::string feature_name(std::size_t i) const {
        if (i < vocab.size()) return vocab.terms[i];
        i -= vocab.size();
        static constexpr std::string_view kSentiment[] = {"sentiment:pos", "sentiment:neg", "sentiment:neu"};
        if (i < 3) return std::string(kSentiment[i]);
        i -= 3;
        if (i < static_cast<std::size_t>(lda.num_topics())) return "topic:" + std::to_string(i);
        return "readability";
    }
};

/// Sparse tf-idf block followed by the dense tail
/// [pos, neg, neu] ++ theta ++ [standardized flesch].
struct FeatureVector {
    /// Width of the sparse block's index space (the vocabulary size).
    std::size_t sparse_dim = 0;
    SparseBlock sparse;
    std::vector<double> dense;
    bool readability_fallback = false;
    bool topic_fallback = false;

    std::size_t total_dim() const { return sparse_dim + dense.size(); }

    friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
        return a.sparse_dim == b.sparse_dim && a.sparse == b.sparse && a.dense == b.dense;
    }
};

/// Tokens handed to LDA: stopwords dropped, unigram vocabulary only.
inline Document lda_tokens(const FeatureBundle& bundle, std::span<const std::string> tokens) {
    Document out;
    for (const auto& t : tokens) {
        if (!bundle.vocab.config.ngram.stopwords.contains(t) && bundle.lda.word_index.contains(t)) out.push_back(t);
    }
    return out;
}

inline FeatureVector assemble_features(std::string_view text, const FeatureBundle& bundle) {
    const TokenStream stream = tokenize(text);
    FeatureVector fv;
    fv.sparse_dim = bundle.vocab.size();
    fv.sparse = transform_tfidf(bundle.vocab, stream.tokens);
    fv.dense.reserve(bundle.dense_dim());

    const SentimentScores s = score(text, bundle.lexicon, bundle.rules);
    fv.dense.insert(fv.dense.end(), {s.pos, s.neg, s.neu});

    const TopicInference topics = infer_theta(bundle.lda, lda_tokens(bundle, stream.tokens));
    fv.topic_fallback = topics.fallback;
    fv.dense.insert(fv.dense.end(), topics.theta.begin(), topics.theta.end());

    if (stream.word_count == 0) {
        fv.readability_fallback = true;
        fv.dense.push_back(0.0);
    } else {
        fv.dense.push_back((flesch_reading_ease(stream) - bundle.flesch_mean) / bundle.flesch_std);
    }
    return fv;
}

struct FeatureConfig {
    VocabConfig vocab;
    LdaConfig lda;
    std::vector<int> topic_candidates{10, 15, 20};
    std::size_t coherence_top_m = 10;
    SentimentRules rules;
};

struct FeatureFitReport {
    std::vector<TopicCountScore> topic_table;
    std::vector<std::string> warnings;
};

/// Fits vocabulary, topic model (selecting the topic count by coherence) and
/// readability standardization on the given training texts.
inline FeatureBundle fit_features(std::span<const std::string> texts, const SentimentLexicon& lexicon,
                                  const FeatureConfig& config, FeatureFitReport* report = nullptr) {
    std::vector<Document> token_docs;
    token_docs.reserve(texts.size());
    std::vector<double> flesch;
    for (const auto& t : texts) {
        TokenStream s = tokenize(t);
        if (s.word_count > 0) flesch.push_back(flesch_reading_ease(s));
        token_docs.push_back(std::move(s.tokens));
    }

    FeatureBundle bundle;
    bundle.lexicon = lexicon;
    bundle.rules = config.rules;
    bundle.vocab = fit_vocab(token_docs, config.vocab);

    std::vector<std::string> unigrams;
    for (const auto& term : bundle.vocab.terms) {
        if (term.find(' ') == std::string::npos) unigrams.push_back(term);
    }
    if (unigrams.empty()) throw DataError("features: vocabulary has no unigram for the topic model");

    const auto unigram_index = detail::index_words(unigrams);
    std::vector<Document> lda_docs;
    lda_docs.reserve(token_docs.size());
    for (const auto& doc : token_docs) {
        Document d;
        for (const auto& t : doc) {
            if (!config.vocab.ngram.stopwords.contains(t) && unigram_index.contains(t)) d.push_back(t);
        }
        lda_docs.push_back(std::move(d));
    }
    TopicSelection sel = select_k(lda_docs, unigrams, config.topic_candidates, config.lda, config.coherence_top_m);
    bundle.lda = std::move(sel.model);

    if (!flesch.empty()) {
        double mean = 0.0;
        for (double f : flesch) mean += f;
        mean /= static_cast<double>(flesch.size());
        double var = 0.0;
        for (double f : flesch) var += (f - mean) * (f - mean);
        const double sd = flesch.size() > 1 ? std::sqrt(var / static_cast<double>(flesch.size() - 1)) : 0.0;
        bundle.flesch_mean = mean;
        bundle.flesch_std = sd > 0.0 ? sd : 1.0;
    }
    if (report) {
        report->topic_table = sel.table;
        report->warnings = bundle.lda.warnings;
    }
    return bundle;
}

}  // namespace soa
