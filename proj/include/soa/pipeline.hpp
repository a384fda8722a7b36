// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "soa/analysis.hpp"
#include "soa/corpus.hpp"
#include "soa/hash.hpp"
#include "soa/protocols.hpp"
#include "soa/serialize.hpp"

namespace soa {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace fs = std::filesystem;

/// Default configuration; every key a config file may set appears here.
inline json default_config() {
    return json::parse(R"({
  "seed": 0,
  "run_id": null,
  "paths": {
    "corpus": null, "annotated": null, "future_annotated": null,
    "lexicon": null, "boosters": null, "negators": null, "stopwords": null,
    "cases": null, "model": null, "predictions": null, "outdir": "runs"
  },
  "schema": {
    "id": "id", "author": "author", "title": "title", "body": "selftext",
    "created_utc": "created_utc", "status": "status", "labels": "labels",
    "intensity": "intensity", "ratings": "ratings"
  },
  "vocab": {"min_df": 0.0025, "max_df": 0.5, "ngram_orders": [1, 2, 3]},
  "lda": {
    "topic_candidates": [10, 15, 20], "alpha": null, "beta": 0.01,
    "iterations": 1000, "burn_in": 200, "infer_sweeps": 50, "coherence_top_m": 10
  },
  "model": {
    "losses": ["hinge"], "lambdas": [0.0001, 0.001, 0.01, 0.1], "epochs": [5, 20, 50],
    "folds": 5, "min_positives": 2
  },
  "eval": {
    "test_frac": 0.2, "protocols": ["main"], "cutoff_month": null,
    "future_from": null, "future_to": null
  },
  "sample": {"per_month": 100, "merge_months": []},
  "human_eval": {"n": 50, "from": null, "to": null},
  "analysis": {"permutation_shuffles": 0, "correlation_source": "predicted", "top_features": 10}
})");
}

namespace detail {

/// Copies `patch` onto `base`, rejecting keys the defaults do not know.
inline void merge_strict(json& base, const json& patch, const std::string& where) {
    if (!patch.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw ValidationError("config: unknown key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && !slot.empty()) {
            merge_strict(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

inline std::vector<std::string> split_dots(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, '.')) parts.push_back(p);
    return parts;
}

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: '" + key + "' has the wrong type");
    }
}

}  // namespace detail

/// Applies one `dotted.key=value` override; the value is read as JSON when it
/// parses and as a string otherwise.
inline void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json patch = value;
    const auto parts = detail::split_dots(key);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    detail::merge_strict(config, patch, "");
}

struct RunConfig {
    /// Effective configuration after defaults and overrides; recorded verbatim.
    json snapshot;
    fs::path base_dir;
    std::uint64_t seed = 0;
    std::optional<std::string> run_id;
    fs::path outdir;
    std::map<std::string, fs::path> paths;
    PostSchema schema;
    TrainingConfig training;
    std::vector<std::string> protocols;
    std::optional<PeriodKey> cutoff;
    std::optional<std::chrono::sys_days> future_from, future_to;
    std::size_t per_month = 100;
    std::vector<std::vector<PeriodKey>> merge_months;
    std::size_t human_n = 50;
    std::optional<std::chrono::sys_days> human_from, human_to;
    std::size_t shuffles = 0;
    bool gold_correlations = false;
    std::size_t top_features = 10;

    std::optional<fs::path> path(const std::string& role) const {
        if (auto it = paths.find(role); it != paths.end()) return it->second;
        return std::nullopt;
    }

    const fs::path& require_path(const std::string& role) const {
        auto it = paths.find(role);
        if (it == paths.end()) throw ValidationError("config: paths." + role + " is required for this command");
        return it->second;
    }
};

/// Interprets a merged configuration. Relative paths resolve against
/// `base_dir` (the config file's directory).
inline RunConfig parse_config(const json& user, const fs::path& base_dir) {
    RunConfig c;
    json j = default_config();
    detail::merge_strict(j, user, "");
    c.snapshot = j;
    c.base_dir = base_dir;

    c.seed = detail::get_as<std::uint64_t>(j["seed"], "seed");
    if (!j["run_id"].is_null()) {
        c.run_id = detail::get_as<std::string>(j["run_id"], "run_id");
        if (c.run_id->empty() || c.run_id->find_first_of("/\\") != std::string::npos || *c.run_id == "." ||
            *c.run_id == "..") {
            throw ValidationError("config: run_id must be a plain directory name");
        }
    }
    for (auto it = j["paths"].begin(); it != j["paths"].end(); ++it) {
        if (it.value().is_null()) continue;
        const fs::path p = detail::get_as<std::string>(it.value(), "paths." + it.key());
        c.paths[it.key()] = p.is_absolute() ? p : base_dir / p;
    }
    c.outdir = c.paths.at("outdir");

    const json& s = j["schema"];
    auto field = [&](const char* k) { return detail::get_as<std::string>(s[k], std::string("schema.") + k); };
    c.schema = {field("id"),     field("author"), field("title"),     field("body"),   field("created_utc"),
                field("status"), field("labels"), field("intensity"), field("ratings")};

    auto& f = c.training.features;
    f.vocab.min_df = detail::get_as<double>(j["vocab"]["min_df"], "vocab.min_df");
    f.vocab.max_df = detail::get_as<double>(j["vocab"]["max_df"], "vocab.max_df");
    f.vocab.ngram.orders = detail::get_as<std::vector<int>>(j["vocab"]["ngram_orders"], "vocab.ngram_orders");
    f.vocab.validate();
    for (int o : f.vocab.ngram.orders) {
        if (o < 1) throw ValidationError("config: vocab.ngram_orders entries must be >= 1");
    }

    const json& l = j["lda"];
    f.topic_candidates = detail::get_as<std::vector<int>>(l["topic_candidates"], "lda.topic_candidates");
    if (f.topic_candidates.empty()) throw ValidationError("config: lda.topic_candidates must be non-empty");
    if (!l["alpha"].is_null()) f.lda.alpha = detail::get_as<double>(l["alpha"], "lda.alpha");
    f.lda.beta = detail::get_as<double>(l["beta"], "lda.beta");
    f.lda.iterations = detail::get_as<int>(l["iterations"], "lda.iterations");
    f.lda.burn_in = detail::get_as<int>(l["burn_in"], "lda.burn_in");
    f.lda.infer_sweeps = detail::get_as<int>(l["infer_sweeps"], "lda.infer_sweeps");
    f.coherence_top_m = detail::get_as<std::size_t>(l["coherence_top_m"], "lda.coherence_top_m");
    if (f.coherence_top_m < 2) throw ValidationError("config: lda.coherence_top_m must be >= 2");
    for (int k : f.topic_candidates) {
        LdaConfig probe = f.lda;
        probe.num_topics = k;
        probe.validate();
    }

    const json& m = j["model"];
    std::vector<Loss> losses;
    for (const auto& name : detail::get_as<std::vector<std::string>>(m["losses"], "model.losses")) {
        losses.push_back(loss_from_name(name));
    }
    c.training.ovr.grid = make_grid(losses, detail::get_as<std::vector<double>>(m["lambdas"], "model.lambdas"),
                                    detail::get_as<std::vector<int>>(m["epochs"], "model.epochs"), 0);
    if (c.training.ovr.grid.empty()) throw ValidationError("config: model grid is empty");
    for (const auto& g : c.training.ovr.grid) g.validate();
    c.training.ovr.folds = detail::get_as<int>(m["folds"], "model.folds");
    if (c.training.ovr.folds < 2) throw ValidationError("config: model.folds must be >= 2");
    c.training.ovr.min_positives = detail::get_as<std::size_t>(m["min_positives"], "model.min_positives");
    c.training.seed = c.seed;

    const json& e = j["eval"];
    c.training.test_frac = detail::get_as<double>(e["test_frac"], "eval.test_frac");
    if (!(c.training.test_frac > 0.0 && c.training.test_frac < 1.0)) {
        throw ValidationError("config: eval.test_frac must be in (0, 1)");
    }
    c.protocols = detail::get_as<std::vector<std::string>>(e["protocols"], "eval.protocols");
    for (const auto& p : c.protocols) {
        if (p != "main" && p != "last_month" && p != "future_window") {
            throw ValidationError("config: unknown protocol '" + p + "' (main, last_month, future_window)");
        }
    }
    if (!e["cutoff_month"].is_null()) c.cutoff = parse_month(detail::get_as<std::string>(e["cutoff_month"], "eval.cutoff_month"));
    if (!e["future_from"].is_null()) c.future_from = parse_date(detail::get_as<std::string>(e["future_from"], "eval.future_from"));
    if (!e["future_to"].is_null()) c.future_to = parse_date(detail::get_as<std::string>(e["future_to"], "eval.future_to"));

    c.per_month = detail::get_as<std::size_t>(j["sample"]["per_month"], "sample.per_month");
    if (c.per_month < 1) throw ValidationError("config: sample.per_month must be >= 1");
    for (const auto& group : detail::get_as<std::vector<std::vector<std::string>>>(j["sample"]["merge_months"],
                                                                                    "sample.merge_months")) {
        std::vector<PeriodKey> g;
        for (const auto& mo : group) g.push_back(parse_month(mo));
        c.merge_months.push_back(std::move(g));
    }

    const json& h = j["human_eval"];
    c.human_n = detail::get_as<std::size_t>(h["n"], "human_eval.n");
    if (c.human_n < 1) throw ValidationError("config: human_eval.n must be >= 1");
    if (!h["from"].is_null()) c.human_from = parse_date(detail::get_as<std::string>(h["from"], "human_eval.from"));
    if (!h["to"].is_null()) c.human_to = parse_date(detail::get_as<std::string>(h["to"], "human_eval.to"));

    const json& a = j["analysis"];
    c.shuffles = detail::get_as<std::size_t>(a["permutation_shuffles"], "analysis.permutation_shuffles");
    const auto source = detail::get_as<std::string>(a["correlation_source"], "analysis.correlation_source");
    if (source != "predicted" && source != "gold") {
        throw ValidationError("config: analysis.correlation_source must be 'predicted' or 'gold'");
    }
    c.gold_correlations = source == "gold";
    c.top_features = detail::get_as<std::size_t>(a["top_features"], "analysis.top_features");
    return c;
}

inline RunConfig load_config(const fs::path& file, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot read config file: " + file.string());
    json user = json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ValidationError("config file is not valid JSON: " + file.string());
    json merged = default_config();
    detail::merge_strict(merged, user, "");
    for (const auto& o : overrides) apply_override(merged, o);
    return parse_config(merged, fs::absolute(file).parent_path());
}

// ---------------------------------------------------------------------------
// Run output
// ---------------------------------------------------------------------------

/// Everything a command produces, held in memory until the run is written.
struct CommandOutput {
    std::map<std::string, std::string> files;
    /// Input role -> path; hashed into the manifest.
    std::map<std::string, fs::path> inputs;
    json extra = json::object();
    std::vector<std::string> warnings;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"ingest",  "sample",    "train",     "evaluate",         "predict",
                                                   "trends", "correlate", "agreement", "human-eval-export"};
    return names;
}

/// Roles whose paths must exist before a command starts.
inline std::vector<std::string> required_inputs(const std::string& command, const RunConfig& c) {
    if (command == "ingest" || command == "sample") return {"corpus"};
    if (command == "train") return {"annotated", "lexicon", "boosters", "negators", "stopwords"};
    if (command == "evaluate") {
        std::vector<std::string> r = {"annotated", "lexicon", "boosters", "negators", "stopwords"};
        for (const auto& p : c.protocols) {
            if (p == "future_window") r.push_back("future_annotated");
        }
        return r;
    }
    if (command == "predict") return {"model", "corpus"};
    if (command == "trends") return {"predictions"};
    if (command == "correlate") return {c.gold_correlations ? "annotated" : "predictions"};
    if (command == "agreement") return {"annotated"};
    if (command == "human-eval-export") return {"corpus"};
    throw ValidationError("unknown command '" + command + "'");
}

/// Checks the configuration for `command` without touching any output.
inline void validate_for(const std::string& command, const RunConfig& c) {
    for (const auto& role : required_inputs(command, c)) {
        const fs::path& p = c.require_path(role);
        if (!fs::exists(p)) throw ValidationError("config: paths." + role + " does not exist: " + p.string());
    }
    if (command == "trends") {
        if (auto cases = c.path("cases"); cases && !fs::exists(*cases)) {
            throw ValidationError("config: paths.cases does not exist: " + cases->string());
        }
    }
    if (command == "predict" && !fs::exists(c.require_path("model") / "manifest.json")) {
        throw ValidationError("config: paths.model is not a model bundle (no manifest.json)");
    }
    if (command == "evaluate") {
        if (c.protocols.empty()) throw ValidationError("config: eval.protocols is empty");
        for (const auto& p : c.protocols) {
            if (p == "last_month" && !c.cutoff) throw ValidationError("config: last_month needs eval.cutoff_month");
            if (p == "future_window" && !(c.future_from && c.future_to)) {
                throw ValidationError("config: future_window needs eval.future_from and eval.future_to");
            }
        }
    }
    if (command == "human-eval-export" && !(c.human_from && c.human_to)) {
        throw ValidationError("config: human-eval-export needs human_eval.from and human_eval.to");
    }
}

/// Run directory name: the command plus a digest of the config and inputs,
/// unless the config names one.
inline std::string run_id_for(const std::string& command, const RunConfig& c, const json& input_hashes) {
    if (c.run_id) return *c.run_id;
    const std::string digest = sha256_hex(command + "\n" + c.snapshot.dump() + "\n" + input_hashes.dump());
    return command + "-" + digest.substr(0, 12);
}

namespace detail {

inline json hash_inputs(const std::map<std::string, fs::path>& inputs) {
    json out = json::object();
    for (const auto& [role, path] : inputs) {
        if (fs::is_directory(path)) {
            out[role] = {{"path", path.filename().string()}, {"sha256", sha256_file(path / "manifest.json")}};
        } else {
            out[role] = {{"path", path.filename().string()}, {"sha256", sha256_file(path)}};
        }
    }
    return out;
}

}  // namespace detail

/// Writes every output file and then manifest.json under <outdir>/<run-id>/.
inline fs::path write_run(const std::string& command, const RunConfig& c, const CommandOutput& out) {
    const json inputs = detail::hash_inputs(out.inputs);
    const std::string run_id = run_id_for(command, c, inputs);
    const fs::path dir = c.outdir / run_id;
    fs::create_directories(dir);
    json outputs = json::object();
    for (const auto& [name, content] : out.files) {
        const fs::path p = dir / name;
        fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        f << content;
        if (!f) throw DataError("cannot write " + p.string());
        outputs[name] = sha256_hex(content);
    }
    json manifest = {{"command", command},     {"tool_version", std::string(kToolVersion)},
                     {"run_id", run_id},       {"seed", c.seed},
                     {"config", c.snapshot},   {"inputs", inputs},
                     {"outputs", outputs},     {"warnings", out.warnings}};
    for (auto it = out.extra.begin(); it != out.extra.end(); ++it) manifest[it.key()] = it.value();
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
    if (!f) throw DataError("cannot write manifest in " + dir.string());
    return dir;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

inline std::string date_string(std::int64_t epoch) {
    const std::chrono::year_month_day ymd{utc_day(epoch)};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline json post_to_json(const Post& p, const PostSchema& schema) {
    json j = {{schema.id, p.id},
              {schema.author, p.author_id},
              {schema.title, p.title},
              {schema.body, p.body},
              {schema.created_utc, p.created_utc}};
    return j;
}

inline SentimentLexicon load_configured_lexicon(const RunConfig& c) {
    return load_lexicon(c.require_path("lexicon"), c.require_path("boosters"), c.require_path("negators"));
}

inline TrainingConfig configured_training(const RunConfig& c) {
    TrainingConfig t = c.training;
    t.features.vocab.ngram.stopwords = load_stopwords(c.require_path("stopwords"));
    return t;
}

inline std::vector<AnnotatedPost> load_annotated_checked(const fs::path& path, const PostSchema& schema,
                                                         std::vector<std::string>& warnings) {
    auto col = load_annotated(path, schema);
    if (!col.skipped.empty() || !col.unusable.empty()) {
        warnings.push_back(path.filename().string() + ": " + std::to_string(col.skipped.size() + col.unusable.size()) +
                           " lines skipped");
    }
    if (col.active.empty()) throw DataError("no usable annotated posts in " + path.string());
    return std::move(col.active);
}

inline std::vector<Post> load_posts_checked(const fs::path& path, const PostSchema& schema,
                                            std::vector<std::string>& warnings, std::string* skip_csv = nullptr) {
    auto col = load_posts(path, schema);
    if (!col.skipped.empty() || !col.unusable.empty()) {
        warnings.push_back(path.filename().string() + ": " + std::to_string(col.skipped.size() + col.unusable.size()) +
                           " lines skipped");
    }
    if (skip_csv) {
        std::ostringstream s;
        write_skip_report(s, col);
        *skip_csv = s.str();
    }
    return std::move(col.active);
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

/// A trained pipeline restored from a `train` run directory.
struct LoadedBundle {
    FeatureBundle features;
    EnsembleModel ensemble;
    std::string manifest_sha256;
};

inline LoadedBundle load_bundle(const fs::path& dir) {
    const std::string manifest_text = read_file(dir / "manifest.json");
    json manifest = json::parse(manifest_text, nullptr, false);
    if (manifest.is_discarded() || manifest.value("command", "") != "train" || !manifest.contains("bundle")) {
        throw DataError("not a model bundle: " + dir.string());
    }
    const json& outputs = manifest.at("outputs");
    auto load_checked = [&](const std::string& name) {
        const std::string text = read_file(dir / name);
        if (!outputs.contains(name) || outputs.at(name).get<std::string>() != sha256_hex(text)) {
            throw DataError("model bundle file does not match its manifest hash: " + name);
        }
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded()) throw DataError("model bundle file is not valid JSON: " + name);
        return j;
    };
    LoadedBundle b;
    b.manifest_sha256 = sha256_hex(manifest_text);
    b.features = feature_bundle_from_json(load_checked("features.json"));
    const json& models = manifest.at("bundle").at("models");
    for (std::size_t s = 0; s <= kNumSubjects; ++s) {
        const std::string name = detail::label_name(s);
        if (!models.contains(name)) throw DataError("model bundle lacks an entry for " + name);
        const json& entry = models.at(name);
        if (!entry.contains("file")) continue;
        LinearModel m = linear_model_from_json(load_checked(entry.at("file").get<std::string>()));
        if (m.weights.size() != b.features.total_dim()) throw DataError("model " + name + " has the wrong dimension");
        if (s < kNumSubjects) {
            b.ensemble.soa_models[s] = std::move(m);
        } else {
            b.ensemble.intensity_model = std::move(m);
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline CommandOutput cmd_ingest(const RunConfig& c) {
    CommandOutput out;
    const fs::path corpus = c.require_path("corpus");
    out.inputs["corpus"] = corpus;
    std::string skips;
    const auto posts = load_posts_checked(corpus, c.schema, out.warnings, &skips);
    if (posts.empty()) out.warnings.push_back("no usable posts; statistics are empty");
    std::ostringstream s;
    s << "month,posts,users,posts_per_user\n";
    std::size_t total = 0;
    std::set<std::string> users;
    for (const auto& m : month_stats(posts)) {
        char ppu[32];
        std::snprintf(ppu, sizeof ppu, "%.2f", m.posts_per_user());
        s << m.month.to_string() << ',' << m.posts << ',' << m.users << ',' << ppu << '\n';
        total += m.posts;
    }
    for (const auto& p : posts) users.insert(p.author_id);
    out.files["corpus_stats.csv"] = s.str();
    out.files["skipped.csv"] = skips;
    out.extra["summary"] = {{"posts", total}, {"users", users.size()}};
    return out;
}

inline CommandOutput cmd_sample(const RunConfig& c) {
    CommandOutput out;
    const fs::path corpus = c.require_path("corpus");
    out.inputs["corpus"] = corpus;
    const auto posts = load_posts_checked(corpus, c.schema, out.warnings);
    const auto sample = stratified_sample(posts, c.per_month, derive_seed(c.seed, "sample"), c.merge_months);
    std::string lines;
    for (const auto& p : sample.posts) lines += post_to_json(p, c.schema).dump() + "\n";
    out.files["sample.jsonl"] = lines;
    json undersized = json::array();
    for (const auto& m : sample.undersized) undersized.push_back(m.to_string());
    out.extra["undersized_months"] = undersized;
    out.extra["sampled"] = sample.posts.size();
    for (const auto& w : sample.warnings) out.warnings.push_back(w);
    return out;
}

inline std::string grid_csv(const EnsembleModel& e) {
    std::ostringstream s;
    s << "label,loss,lambda,epochs,mean_score,fold_scores,error\n";
    for (const auto& t : e.report) {
        for (const auto& row : t.grid.table) {
            std::string folds;
            for (double f : row.fold_scores) folds += (folds.empty() ? "" : ";") + std::to_string(f);
            s << t.label << ',' << loss_name(row.config.loss) << ',' << row.config.lambda << ',' << row.config.epochs
              << ',' << row.mean_score << ',' << folds << ',' << csv_field(row.error) << '\n';
        }
    }
    return s.str();
}

inline std::string topic_csv(const FeatureFitReport& r) {
    std::ostringstream s;
    s << "num_topics,mean_coherence,error\n";
    for (const auto& row : r.topic_table) {
        s << row.num_topics << ',' << row.mean_coherence << ',' << csv_field(row.error) << '\n';
    }
    return s.str();
}

inline std::string importance_csv(const EnsembleModel& e, const FeatureBundle& b, std::size_t n) {
    std::ostringstream s;
    s << "label,rank,feature,coefficient\n";
    auto emit = [&](const std::string& label, const LinearModel& m) {
        const auto top = top_features(m, b, n);
        for (std::size_t i = 0; i < top.features.size(); ++i) {
            s << label << ',' << i + 1 << ',' << csv_field(top.features[i].name) << ',' << top.features[i].coefficient
              << '\n';
        }
    };
    for (std::size_t k = 0; k < kNumSubjects; ++k) {
        if (e.soa_models[k]) emit(std::string(kSubjectNames[k]), *e.soa_models[k]);
    }
    if (e.intensity_model) emit(std::string(kIntensityName), *e.intensity_model);
    return s.str();
}

inline CommandOutput cmd_train(const RunConfig& c) {
    CommandOutput out;
    for (const char* role : {"annotated", "lexicon", "boosters", "negators", "stopwords"}) {
        out.inputs[role] = c.require_path(role);
    }
    const auto posts = load_annotated_checked(c.require_path("annotated"), c.schema, out.warnings);
    const auto lexicon = load_configured_lexicon(c);
    const TrainingConfig training = configured_training(c);
    const TrainedPipeline p = fit_pipeline(posts, lexicon, training);

    out.files["features.json"] = to_json(p.bundle).dump() + "\n";
    json models = json::object(), selection = json::object();
    for (std::size_t s = 0; s <= kNumSubjects; ++s) {
        const LabelTraining& t = p.ensemble.report[s];
        const auto& model = s < kNumSubjects ? p.ensemble.soa_models[s] : p.ensemble.intensity_model;
        json entry = {{"positives", t.positives}, {"examples", t.examples}};
        if (model) {
            const std::string file = "models/" + t.label + ".json";
            out.files[file] = to_json(*model).dump() + "\n";
            entry["file"] = file;
            entry["config"] = to_json(model->config);
            entry["cv_score"] = t.grid.best_score;
        } else {
            entry["skipped"] = t.skip_reason;
            out.warnings.push_back(t.label + " model skipped: " + t.skip_reason);
        }
        models[t.label] = entry;
    }
    out.files["grid_search.csv"] = grid_csv(p.ensemble);
    out.files["topic_selection.csv"] = topic_csv(p.feature_report);
    out.files["feature_importance.csv"] = importance_csv(p.ensemble, p.bundle, c.top_features);
    const TrainingConfig resolved = training.resolved();
    out.extra["bundle"] = {{"models", models},
                           {"num_topics", p.bundle.lda.num_topics()},
                           {"vocab_size", p.bundle.vocab.size()},
                           {"feature_dim", p.bundle.total_dim()}};
    out.extra["seeds"] = {{"master", c.seed},
                          {"lda", resolved.features.lda.seed},
                          {"ovr", resolved.ovr.seed},
                          {"split", resolved.split_seed()}};
    for (const auto& w : p.feature_report.warnings) out.warnings.push_back(w);
    return out;
}

inline CommandOutput cmd_evaluate(const RunConfig& c) {
    CommandOutput out;
    for (const char* role : {"annotated", "lexicon", "boosters", "negators", "stopwords"}) {
        out.inputs[role] = c.require_path(role);
    }
    const auto posts = load_annotated_checked(c.require_path("annotated"), c.schema, out.warnings);
    const auto lexicon = load_configured_lexicon(c);
    const TrainingConfig training = configured_training(c);
    for (const auto& protocol : c.protocols) {
        ProtocolRun run;
        if (protocol == "main") {
            run = main_split(posts, lexicon, training);
            json split = {{"seed", run.plan.seed}, {"train", json::array()}, {"test", json::array()}};
            for (auto i : run.plan.train) split["train"].push_back(posts[i].post.id);
            for (auto i : run.plan.test) split["test"].push_back(posts[i].post.id);
            out.files["split_main.json"] = split.dump(2) + "\n";
        } else if (protocol == "last_month") {
            run = last_month_holdout(posts, *c.cutoff, lexicon, training);
        } else {
            out.inputs["future_annotated"] = c.require_path("future_annotated");
            const auto future = load_annotated_checked(c.require_path("future_annotated"), c.schema, out.warnings);
            run = future_window(posts, future, *c.future_from, *c.future_to, lexicon, training);
        }
        out.files["eval_" + protocol + ".json"] = to_json(run.report).dump(2) + "\n";
        std::ostringstream csv;
        write_eval_csv(csv, run.report);
        out.files["eval_" + protocol + ".csv"] = csv.str();
        for (const auto& w : run.report.warnings) out.warnings.push_back(protocol + ": " + w);
    }
    return out;
}

/// Featurizes and predicts every post; rows come back in input order.
inline std::string predict_jsonl(const LoadedBundle& b, std::span<const Post> posts) {
    std::string lines;
    for (const auto& post : posts) {
        const FeatureVector x = assemble_features(post.text(), b.features);
        const EnsemblePrediction p = predict(b.ensemble, x);
        const PredictionRow row{post.id, post.created_utc, p.soa, p.intensity};
        lines += to_json(row, p, x).dump() + "\n";
    }
    return lines;
}

inline CommandOutput cmd_predict(const RunConfig& c) {
    CommandOutput out;
    out.inputs["model"] = c.require_path("model");
    out.inputs["corpus"] = c.require_path("corpus");
    const LoadedBundle bundle = load_bundle(c.require_path("model"));
    const auto posts = load_posts_checked(c.require_path("corpus"), c.schema, out.warnings);
    out.files["predictions.jsonl"] = predict_jsonl(bundle, posts);
    out.extra["model_manifest_sha256"] = bundle.manifest_sha256;
    out.extra["predicted"] = posts.size();
    return out;
}

inline std::vector<PredictionRow> load_predictions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read predictions: " + path.string());
    std::vector<PredictionRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataError("predictions line " + std::to_string(line_no) + ": malformed JSON");
        rows.push_back(prediction_from_json(j));
    }
    return rows;
}

inline CommandOutput cmd_trends(const RunConfig& c) {
    CommandOutput out;
    out.inputs["predictions"] = c.require_path("predictions");
    const auto rows = load_predictions(c.require_path("predictions"));
    if (rows.empty()) out.warnings.push_back("no predictions; trends are empty");
    const auto monthly = soa_trend(rows);
    const auto weekly = intensity_trend(rows);
    std::ostringstream a, b;
    write_trend_csv(a, monthly);
    write_trend_csv(b, weekly);
    out.files["soa_trend.csv"] = a.str();
    out.files["intensity_trend.csv"] = b.str();
    if (auto cases_path = c.path("cases")) {
        out.inputs["cases"] = *cases_path;
        std::ifstream in(*cases_path);
        const auto cases = load_cases(in);
        std::ostringstream o;
        write_overlay_csv(o, overlay_cases(monthly, cases));
        out.files["soa_trend_cases.csv"] = o.str();
    }
    return out;
}

inline CommandOutput cmd_correlate(const RunConfig& c) {
    CommandOutput out;
    std::vector<PredictionRow> rows;
    std::string population;
    if (c.gold_correlations) {
        out.inputs["annotated"] = c.require_path("annotated");
        for (const auto& a : load_annotated_checked(c.require_path("annotated"), c.schema, out.warnings)) {
            rows.push_back({a.post.id, a.post.created_utc, a.soa, combine_intensity_labels(a.intensity)});
        }
        population = "gold labels of the annotated posts";
    } else {
        out.inputs["predictions"] = c.require_path("predictions");
        rows = load_predictions(c.require_path("predictions"));
        population = "machine-annotated posts";
    }
    const auto m = label_correlations(rows, c.shuffles, derive_seed(c.seed, "correlate"));
    std::ostringstream s;
    write_correlation_csv(s, m);
    out.files["correlations.csv"] = s.str();
    out.extra["population"] = population;
    out.extra["n"] = m.n;
    out.extra["p_values"] = c.shuffles > 0 ? "permutation" : "t-approximation";
    return out;
}

inline CommandOutput cmd_agreement(const RunConfig& c) {
    CommandOutput out;
    out.inputs["annotated"] = c.require_path("annotated");
    const auto posts = load_annotated_checked(c.require_path("annotated"), c.schema, out.warnings);
    const auto rep = agreement(posts);
    std::ostringstream s;
    s << "label,alpha\n";
    auto cell = [](const std::optional<double>& v) {
        std::ostringstream o;
        if (v) o << *v;
        return o.str();
    };
    for (std::size_t i = 0; i < rep.labels.size(); ++i) s << rep.labels[i] << ',' << cell(rep.alpha[i]) << '\n';
    s << "soa_mean," << cell(rep.soa_mean) << '\n';
    s << "intensity," << cell(rep.intensity) << '\n';
    out.files["agreement.csv"] = s.str();
    out.extra["items"] = rep.items;
    out.extra["raters"] = rep.raters;
    return out;
}

inline CommandOutput cmd_human_eval_export(const RunConfig& c) {
    CommandOutput out;
    out.inputs["corpus"] = c.require_path("corpus");
    const auto posts = load_posts_checked(c.require_path("corpus"), c.schema, out.warnings);
    const auto sample = human_eval_sample(posts, *c.human_from, *c.human_to, c.human_n, derive_seed(c.seed, "human-eval"));
    std::ostringstream sheet;
    sheet << "id,date,text";
    for (auto name : kSubjectNames) sheet << ',' << name;
    sheet << ",intensity_level\n";
    for (const auto& p : sample.rows) {
        sheet << csv_field(p.id) << ',' << date_string(p.created_utc) << ',' << csv_field(p.text());
        for (std::size_t s = 0; s <= kNumSubjects; ++s) sheet << ',';
        sheet << '\n';
    }
    out.files["annotation_sheet.csv"] = sheet.str();
    if (auto model = c.path("model")) {
        out.inputs["model"] = *model;
        out.files["sealed_predictions.jsonl"] = predict_jsonl(load_bundle(*model), sample.rows);
    }
    out.extra["undersized"] = sample.undersized;
    out.extra["window_size"] = sample.window_size;
    out.extra["rows"] = sample.rows.size();
    if (sample.undersized) {
        out.warnings.push_back("window holds " + std::to_string(sample.window_size) + " posts, fewer than " +
                               std::to_string(c.human_n));
    }
    return out;
}

/// Validates, runs and writes one command; returns the run directory.
inline fs::path run_command(const std::string& command, const RunConfig& c) {
    validate_for(command, c);
    static const std::map<std::string, std::function<CommandOutput(const RunConfig&)>> table = {
        {"ingest", cmd_ingest},       {"sample", cmd_sample},     {"train", cmd_train},
        {"evaluate", cmd_evaluate},   {"predict", cmd_predict},   {"trends", cmd_trends},
        {"correlate", cmd_correlate}, {"agreement", cmd_agreement}, {"human-eval-export", cmd_human_eval_export}};
    const CommandOutput out = table.at(command)(c);
    return write_run(command, c, out);
}

}  // namespace soa
