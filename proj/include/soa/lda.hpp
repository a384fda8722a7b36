// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "soa/error.hpp"
#include "soa/random.hpp"

namespace soa {

using Document = std::vector<std::string>;

struct LdaConfig {
    int num_topics = 15;
    /// Symmetric document-topic prior; unset means 50 / num_topics.
    std::optional<double> alpha;
    double beta = 0.01;
    int iterations = 1000;
    int burn_in = 200;
    std::uint64_t seed = 0;
    /// Gibbs sweeps used to infer topic mixtures of unseen documents.
    int infer_sweeps = 50;
    /// Re-verify count bookkeeping and theta normalization after every sweep.
    bool check_invariants = false;

    double alpha_value() const { return alpha.value_or(50.0 / num_topics); }

    void validate() const {
        if (num_topics < 2) throw ValidationError("lda: num_topics must be >= 2");
        if (!(alpha_value() > 0.0) || !(beta > 0.0)) throw ValidationError("lda: alpha and beta must be > 0");
        if (burn_in < 0 || iterations <= burn_in) throw ValidationError("lda: need iterations > burn_in >= 0");
        if (infer_sweeps < 1) throw ValidationError("lda: infer_sweeps must be >= 1");
    }
};

/// Fitted collapsed-Gibbs state: topic-word counts from the final sweep.
struct LdaModel {
    LdaConfig config;
    std::vector<std::string> vocab;
    std::unordered_map<std::string, int> word_index;
    /// num_topics x vocab.size(), row-major.
    std::vector<std::int64_t> topic_word;
    std::vector<std::int64_t> topic_totals;
    /// Topic mixture of each training document that survived filtering.
    std::vector<std::vector<double>> doc_theta;
    /// Input positions of documents dropped for having no in-vocabulary token.
    std::vector<std::size_t> excluded_docs;
    std::vector<std::string> warnings;

    int num_topics() const { return config.num_topics; }
    std::size_t vocab_size() const { return vocab.size(); }
    std::int64_t count(int topic, std::size_t word) const {
        return topic_word[static_cast<std::size_t>(topic) * vocab.size() + word];
    }
};

struct TopicInference {
    std::vector<double> theta;
    /// True when the document had no in-vocabulary token and theta is uniform.
    bool fallback = false;
};

namespace detail {

inline std::unordered_map<std::string, int> index_words(const std::vector<std::string>& vocab) {
    std::unordered_map<std::string, int> idx;
    idx.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (!idx.emplace(vocab[i], static_cast<int>(i)).second) {
            throw ValidationError("lda: duplicate vocabulary entry '" + vocab[i] + "'");
        }
    }
    return idx;
}

inline std::vector<int> to_ids(const Document& doc, const std::unordered_map<std::string, int>& idx) {
    std::vector<int> ids;
    ids.reserve(doc.size());
    for (const auto& w : doc) {
        if (auto it = idx.find(w); it != idx.end()) ids.push_back(it->second);
    }
    return ids;
}

/// Draws a topic for one token given the current counts (token removed).
template <typename DocCount, typename WordCount, typename TopicTotal>
int sample_topic(Rng& rng, std::vector<double>& cdf, int K, double alpha, double beta, double vbeta,
                 DocCount n_dk, WordCount n_kw, TopicTotal n_k) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
        acc += (n_dk(k) + alpha) * (n_kw(k) + beta) / (n_k(k) + vbeta);
        cdf[static_cast<std::size_t>(k)] = acc;
    }
    const double u = uniform01(rng) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.begin() + K, u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), K - 1));
}

inline std::vector<double> theta_from_counts(std::span<const std::int64_t> n_dk, std::size_t len, double alpha) {
    const auto K = n_dk.size();
    std::vector<double> theta(K);
    const double denom = static_cast<double>(len) + static_cast<double>(K) * alpha;
    for (std::size_t k = 0; k < K; ++k) theta[k] = (static_cast<double>(n_dk[k]) + alpha) / denom;
    return theta;
}

inline void check_distribution(const std::vector<double>& theta) {
    double s = 0.0;
    for (double t : theta) {
        if (!(t >= 0.0)) throw std::logic_error("lda: negative theta entry");
        s += t;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw std::logic_error("lda: theta does not sum to 1");
}

}  // namespace detail

/// Collapsed Gibbs sampling over `docs` restricted to `vocab`.
inline LdaModel fit_lda(std::span<const Document> docs, const std::vector<std::string>& vocab,
                        const LdaConfig& config) {
    config.validate();
    LdaModel model;
    model.config = config;
    model.vocab = vocab;
    model.word_index = detail::index_words(vocab);

    std::vector<std::vector<int>> words;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto ids = detail::to_ids(docs[d], model.word_index);
        if (ids.empty()) {
            model.excluded_docs.push_back(d);
            continue;
        }
        words.push_back(std::move(ids));
    }
    if (!model.excluded_docs.empty()) {
        model.warnings.push_back("lda: " + std::to_string(model.excluded_docs.size()) +
                                 " document(s) without in-vocabulary tokens excluded");
    }
    if (words.empty()) throw DataError("lda: empty effective corpus (no document has an in-vocabulary token)");

    const int K = config.num_topics;
    const std::size_t V = vocab.size();
    const std::size_t D = words.size();
    const double alpha = config.alpha_value();
    const double beta = config.beta;
    const double vbeta = static_cast<double>(V) * beta;

    std::vector<std::int64_t> n_dk(D * K, 0);
    std::vector<std::int64_t>& n_kw = model.topic_word;
    std::vector<std::int64_t>& n_k = model.topic_totals;
    n_kw.assign(static_cast<std::size_t>(K) * V, 0);
    n_k.assign(K, 0);
    std::vector<std::vector<int>> z(D);

    Rng rng(config.seed);
    for (std::size_t d = 0; d < D; ++d) {
        z[d].resize(words[d].size());
        for (std::size_t i = 0; i < words[d].size(); ++i) {
            const int k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
            z[d][i] = k;
            ++n_dk[d * K + k];
            ++n_kw[static_cast<std::size_t>(k) * V + words[d][i]];
            ++n_k[k];
        }
    }

    auto verify = [&] {
        for (std::size_t d = 0; d < D; ++d) {
            std::int64_t s = 0;
            for (int k = 0; k < K; ++k) {
                if (n_dk[d * K + k] < 0) throw std::logic_error("lda: negative doc-topic count");
                s += n_dk[d * K + k];
            }
            if (s != static_cast<std::int64_t>(words[d].size())) throw std::logic_error("lda: doc-topic counts drift");
            detail::check_distribution(
                detail::theta_from_counts({n_dk.data() + d * K, static_cast<std::size_t>(K)}, words[d].size(), alpha));
        }
        for (int k = 0; k < K; ++k) {
            std::int64_t s = 0;
            for (std::size_t w = 0; w < V; ++w) {
                const auto c = n_kw[static_cast<std::size_t>(k) * V + w];
                if (c < 0) throw std::logic_error("lda: negative topic-word count");
                s += c;
            }
            if (s != n_k[k]) throw std::logic_error("lda: topic-word counts drift");
        }
    };

    std::vector<double> cdf(K);
    for (int sweep = 0; sweep < config.iterations; ++sweep) {
        for (std::size_t d = 0; d < D; ++d) {
            std::int64_t* dk = n_dk.data() + d * K;
            for (std::size_t i = 0; i < words[d].size(); ++i) {
                const int w = words[d][i];
                int k = z[d][i];
                --dk[k];
                --n_kw[static_cast<std::size_t>(k) * V + w];
                --n_k[k];
                k = detail::sample_topic(
                    rng, cdf, K, alpha, beta, vbeta, [&](int t) { return static_cast<double>(dk[t]); },
                    [&](int t) { return static_cast<double>(n_kw[static_cast<std::size_t>(t) * V + w]); },
                    [&](int t) { return static_cast<double>(n_k[t]); });
                z[d][i] = k;
                ++dk[k];
                ++n_kw[static_cast<std::size_t>(k) * V + w];
                ++n_k[k];
            }
        }
        if (config.check_invariants) verify();
    }

    model.doc_theta.reserve(D);
    for (std::size_t d = 0; d < D; ++d) {
        model.doc_theta.push_back(
            detail::theta_from_counts({n_dk.data() + d * K, static_cast<std::size_t>(K)}, words[d].size(), alpha));
    }
    return model;
}

/// Topic mixture of an unseen document; model counts stay frozen. The
/// sampler seed depends on the model seed and the document content only.
inline TopicInference infer_theta(const LdaModel& model, const Document& doc) {
    const int K = model.num_topics();
    const double alpha = model.config.alpha_value();
    const auto ids = detail::to_ids(doc, model.word_index);
    if (ids.empty()) return {std::vector<double>(K, 1.0 / K), true};

    std::uint64_t h = model.config.seed;
    for (int w : ids) h = derive_seed(h, static_cast<std::uint64_t>(w));
    Rng rng(h);

    const std::size_t V = model.vocab_size();
    const double beta = model.config.beta;
    const double vbeta = static_cast<double>(V) * beta;
    std::vector<std::int64_t> n_dk(K, 0);
    std::vector<int> z(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        z[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
        ++n_dk[z[i]];
    }
    std::vector<double> cdf(K);
    for (int sweep = 0; sweep < model.config.infer_sweeps; ++sweep) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int w = ids[i];
            --n_dk[z[i]];
            z[i] = detail::sample_topic(
                rng, cdf, K, alpha, beta, vbeta, [&](int t) { return static_cast<double>(n_dk[t]); },
                [&](int t) { return static_cast<double>(model.count(t, static_cast<std::size_t>(w))); },
                [&](int t) { return static_cast<double>(model.topic_totals[t]); });
            ++n_dk[z[i]];
        }
    }
    return {detail::theta_from_counts(n_dk, ids.size(), alpha), false};
}

/// Highest-count words of a topic, ties broken by vocabulary position. Words
/// with zero count in the topic are never returned.
inline std::vector<std::size_t> top_words(const LdaModel& model, int topic, std::size_t m) {
    std::vector<std::size_t> idx;
    for (std::size_t w = 0; w < model.vocab_size(); ++w) {
        if (model.count(topic, w) > 0) idx.push_back(w);
    }
    const std::size_t n = std::min(m, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          const auto ca = model.count(topic, a), cb = model.count(topic, b);
                          return ca != cb ? ca > cb : a < b;
                      });
    idx.resize(n);
    return idx;
}

/// Per-word document postings over a reference corpus, for co-document
/// frequencies.
class DocFrequencyIndex {
public:
    explicit DocFrequencyIndex(std::span<const Document> docs) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            for (const auto& w : docs[d]) {
                auto& p = postings_[w];
                if (p.empty() || p.back() != d) p.push_back(d);
            }
        }
    }

    std::size_t df(const std::string& w) const {
        auto it = postings_.find(w);
        return it == postings_.end() ? 0 : it->second.size();
    }

    std::size_t co_df(const std::string& a, const std::string& b) const {
        auto ia = postings_.find(a), ib = postings_.find(b);
        if (ia == postings_.end() || ib == postings_.end()) return 0;
        const auto& pa = ia->second;
        const auto& pb = ib->second;
        std::size_t n = 0, i = 0, j = 0;
        while (i < pa.size() && j < pb.size()) {
            if (pa[i] < pb[j]) {
                ++i;
            } else if (pb[j] < pa[i]) {
                ++j;
            } else {
                ++n, ++i, ++j;
            }
        }
        return n;
    }

private:
    std::unordered_map<std::string, std::vector<std::size_t>> postings_;
};

/// U_MASS coherence of one ranked word list:
/// sum over m > l of log((D(w_m, w_l) + 1) / D(w_l)).
inline double umass_score(std::span<const std::string> ranked_words, const DocFrequencyIndex& index) {
    double c = 0.0;
    for (std::size_t m = 1; m < ranked_words.size(); ++m) {
        for (std::size_t l = 0; l < m; ++l) {
            const auto dl = index.df(ranked_words[l]);
            if (dl == 0) {
                throw std::logic_error("umass: top word '" + ranked_words[l] + "' absent from the reference corpus");
            }
            c += std::log((static_cast<double>(index.co_df(ranked_words[m], ranked_words[l])) + 1.0) /
                          static_cast<double>(dl));
        }
    }
    return c;
}

struct CoherenceResult {
    std::vector<double> per_topic;
    double mean = 0.0;
    std::vector<std::vector<std::string>> top_words;
};

inline CoherenceResult umass_coherence(const LdaModel& model, std::span<const Document> reference, std::size_t top_m) {
    if (top_m < 2) throw ValidationError("umass: top_m must be >= 2");
    const DocFrequencyIndex index(reference);
    CoherenceResult r;
    for (int k = 0; k < model.num_topics(); ++k) {
        std::vector<std::string> words;
        for (auto w : top_words(model, k, top_m)) words.push_back(model.vocab[w]);
        r.per_topic.push_back(umass_score(words, index));
        r.top_words.push_back(std::move(words));
    }
    r.mean = std::accumulate(r.per_topic.begin(), r.per_topic.end(), 0.0) / static_cast<double>(r.per_topic.size());
    return r;
}

struct TopicCountScore {
    int num_topics = 0;
    double mean_coherence = 0.0;
    std::string error;  // non-empty when fitting failed
};

struct TopicSelection {
    int best_k = 0;
    LdaModel model;
    std::vector<TopicCountScore> table;
};

/// Fits one model per candidate topic count with the same seed and keeps the
/// one with the highest mean U_MASS coherence; ties go to the smaller count.
inline TopicSelection select_k(std::span<const Document> docs, const std::vector<std::string>& vocab,
                               std::vector<int> candidates, const LdaConfig& base, std::size_t top_m = 10) {
    if (candidates.empty()) throw ValidationError("select_k: no candidate topic counts");
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    TopicSelection best;
    std::optional<std::size_t> best_row;
    std::string last_error;
    for (int k : candidates) {
        LdaConfig cfg = base;
        cfg.num_topics = k;
        TopicCountScore row{k, 0.0, {}};
        try {
            LdaModel m = fit_lda(docs, vocab, cfg);
            row.mean_coherence = umass_coherence(m, docs, top_m).mean;
            if (!best_row || row.mean_coherence > best.table[*best_row].mean_coherence) {
                best.model = std::move(m);
                best_row = best.table.size();
            }
        } catch (const Error& e) {
            row.error = e.what();
            last_error = e.what();
        }
        best.table.push_back(std::move(row));
    }
    if (!best_row) throw DataError("select_k: every candidate failed: " + last_error);
    best.best_k = best.table[*best_row].num_topics;
    return best;
}

}  // namespace soa
