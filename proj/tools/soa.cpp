// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

// soa: command-line front end for the pipeline.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soa/pipeline.hpp"

namespace {

struct Flags {
    std::string config;
    std::vector<std::string> overrides;
    std::string outdir, run_id, model, corpus, predictions;
    std::vector<std::string> protocols;
    long long seed = -1;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", f.overrides, "override a config key: dotted.key=value (repeatable)");
    cmd->add_option("--outdir", f.outdir, "output root (paths.outdir)");
    cmd->add_option("--run-id", f.run_id, "run directory name (run_id)");
    cmd->add_option("--seed", f.seed, "master seed (seed)")->check(CLI::NonNegativeNumber);
}

std::vector<std::string> overrides_from(const Flags& f) {
    std::vector<std::string> o = f.overrides;
    auto quoted = [](const std::string& s) { return nlohmann::json(s).dump(); };
    // Paths given on the command line are relative to the working directory.
    auto path = [&](const std::string& s) { return quoted(std::filesystem::absolute(s).lexically_normal().string()); };
    if (!f.outdir.empty()) o.push_back("paths.outdir=" + path(f.outdir));
    if (!f.run_id.empty()) o.push_back("run_id=" + quoted(f.run_id));
    if (!f.model.empty()) o.push_back("paths.model=" + path(f.model));
    if (!f.corpus.empty()) o.push_back("paths.corpus=" + path(f.corpus));
    if (!f.predictions.empty()) o.push_back("paths.predictions=" + path(f.predictions));
    if (!f.protocols.empty()) o.push_back("eval.protocols=" + nlohmann::json(f.protocols).dump());
    if (f.seed >= 0) o.push_back("seed=" + std::to_string(f.seed));
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subjects-of-anxiety text mining pipeline"};
    app.set_version_flag("--version", std::string(soa::kToolVersion));
    app.require_subcommand(1);
    Flags flags;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "load a post dump and write per-month corpus statistics"},
        {"sample", "draw a per-month stratified sample for annotation"},
        {"train", "fit features and the classifier ensemble on annotated posts"},
        {"evaluate", "run evaluation protocols (main, last_month, future_window)"},
        {"predict", "annotate posts with a trained model bundle"},
        {"trends", "monthly SOA and weekly intensity trend tables"},
        {"correlate", "Holm-corrected correlation matrix of the labels"},
        {"agreement", "Cronbach's alpha of the double annotations"},
        {"human-eval-export", "blinded annotation sheet for a date window"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, flags);
        if (name == "predict" || name == "human-eval-export") {
            cmd->add_option("--model", flags.model, "model bundle directory (paths.model)");
        }
        if (name == "predict" || name == "ingest" || name == "sample" || name == "human-eval-export") {
            cmd->add_option("--corpus", flags.corpus, "post dump (paths.corpus)");
        }
        if (name == "trends" || name == "correlate") {
            cmd->add_option("--predictions", flags.predictions, "prediction file (paths.predictions)");
        }
        if (name == "evaluate") cmd->add_option("--protocol", flags.protocols, "protocols to run (eval.protocols)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(soa::ExitCode::kValidation);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const soa::RunConfig config = soa::load_config(flags.config, overrides_from(flags));
        const auto dir = soa::run_command(command, config);
        std::cout << dir.string() << '\n';
        return static_cast<int>(soa::ExitCode::kOk);
    } catch (const soa::Error& e) {
        std::cerr << "soa " << command << ": " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "soa " << command << ": " << e.what() << '\n';
        return static_cast<int>(soa::ExitCode::kData);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "soa " << command << ": " << e.what() << '\n';
        return static_cast<int>(soa::ExitCode::kData);
    }
}
