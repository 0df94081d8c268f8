#include <filesystem>
#include <fstream>
#include <iostream>

#include <fmt/core.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "oncosynth/pipeline.hpp"
#include "oncosynth/version.hpp"

namespace oncosynth {

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool verbose = false;
    bool quiet = false;
};

std::string default_path(const PipelineConfig& c, const char* name) {
    return (std::filesystem::path(c.output_dir) / name).string();
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Synthetic cancer-registry pipeline: registry data to a state-machine module, simulation and "
                 "fidelity evaluation."};
    app.set_version_flag("--version", std::string(kGeneratorVersion));
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("-c,--config", g.config_path, "YAML configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the master seed");
    app.add_option("-o,--out-dir", g.out_dir, "Override the output directory");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_flag("-q,--quiet", g.quiet, "Only log warnings and errors");

    std::string in, out, text, json, table, module_path, events, source, fhir, plots;
    std::optional<std::size_t> population;
    std::optional<unsigned> workers;
    std::vector<std::string> stages;

    auto* gt = app.add_subcommand("ground-truth", "Sample a registry table from the configured ground truth");
    gt->add_option("--out", out, "Registry table to write");

    auto* map = app.add_subcommand("map", "Map a registry table to oBDS XML with fictitious exact dates");
    map->add_option("--in", in, "Registry table")->required();
    map->add_option("--out", out, "oBDS XML to write");

    auto* filter = app.add_subcommand("filter", "Remove patients with excluded localizations");
    filter->add_option("--in", in, "oBDS XML")->required();
    filter->add_option("--out", out, "Filtered oBDS XML to write");

    auto* audit = app.add_subcommand("audit", "k-anonymity audit; exits 3 when it fails");
    audit->add_option("--in", in, "oBDS XML")->required();
    audit->add_option("--json", json, "Machine-readable report");
    audit->add_option("--table", table, "Text table");

    auto* tl = app.add_subcommand("timelines", "Write per-case timelines as a table");
    tl->add_option("--in", in, "oBDS XML")->required();
    tl->add_option("--out", out, "Timeline table to write");

    auto* ex = app.add_subcommand("extract", "Audit, then extract transition rules (exits 3 on audit failure)");
    ex->add_option("--in", in, "oBDS XML")->required();
    ex->add_option("--out", out, "Rules JSON to write");
    ex->add_option("--text", text, "Rules table to write");

    auto* em = app.add_subcommand("emit", "Build the module JSON from extracted rules");
    em->add_option("--in", in, "Rules JSON")->required();
    em->add_option("--out", out, "Module JSON to write");

    auto* va = app.add_subcommand("validate", "Check a module; exits 4 with the violations");
    va->add_option("--in", in, "Module JSON")->required();

    auto* sim = app.add_subcommand("simulate", "Run a module and write the event log");
    sim->add_option("--module", module_path, "Module JSON")->required();
    sim->add_option("--out", out, "Event log to write");
    sim->add_option("--fhir", fhir, "Also write FHIR-lite bundles (NDJSON)");
    sim->add_option("-n,--population", population, "Patients to simulate");
    sim->add_option("-j,--workers", workers, "Worker threads");

    auto* ev = app.add_subcommand("evaluate", "Compare a source dataset with a simulated event log");
    ev->add_option("--source", source, "Source oBDS XML")->required();
    ev->add_option("--events", events, "Simulated event log")->required();
    ev->add_option("--out", out, "Report JSON to write");
    ev->add_option("--text", text, "Report text to write");
    ev->add_option("--plots", plots, "Directory for plot tables");

    auto* run = app.add_subcommand("run", "Run the configured stages, chaining artifacts in the output directory");
    run->add_option("--stages", stages, "Stages to run (default: all that apply)")->delimiter(',');
    run->add_option("-j,--workers", workers, "Worker threads");

    auto* self = app.add_subcommand("self-test", "Round trip from the built-in (or configured) ground truth");
    self->add_option("-j,--workers", workers, "Worker threads");

    auto* show = app.add_subcommand("show-config", "Print the effective configuration and its digest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    spdlog::set_default_logger(
        std::make_shared<spdlog::logger>("oncosynth", std::make_shared<spdlog::sinks::stderr_color_sink_mt>()));
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(g.quiet ? spdlog::level::warn : g.verbose ? spdlog::level::debug : spdlog::level::info);

    std::string stage = app.get_subcommands().front()->get_name();
    bool stage_logged = false;
    try {
        PipelineConfig config;
        if (!g.config_path.empty()) {
            config = load_config(g.config_path);
        } else if (self->parsed()) {
            config = self_test_config();
        }
        if (g.seed) config.seed = *g.seed;
        if (!g.out_dir.empty()) config.output_dir = g.out_dir;
        if (population) config.simulation.population_size = *population;
        if (workers) config.simulation.workers = *workers;
        if (!stages.empty()) {
            config.stages.clear();
            for (const auto& s : stages) config.stages.push_back(parse_stage(s));
        }
        if (self->parsed() && !config.ground_truth) {
            throw ConfigError("self-test needs a ground_truth section in the configuration");
        }
        if (auto issues = config_violations(config); !issues.empty()) {
            throw ConfigError("invalid configuration: " + issues.front());
        }

        const Pipeline p(config);
        auto or_default = [&](const std::string& v, const char* name) { return v.empty() ? default_path(config, name) : v; };

        if (gt->parsed()) {
            p.ground_truth(or_default(out, artifact::kRegistry));
        } else if (map->parsed()) {
            p.map(in, or_default(out, artifact::kDataset));
        } else if (filter->parsed()) {
            p.filter(in, or_default(out, artifact::kFiltered));
        } else if (audit->parsed()) {
            p.audit(in, or_default(json, artifact::kAuditJson), or_default(table, artifact::kAuditText));
        } else if (tl->parsed()) {
            p.timelines(in, or_default(out, artifact::kTimelines));
        } else if (ex->parsed()) {
            p.extract(in, or_default(out, artifact::kRulesJson), or_default(text, artifact::kRulesText));
        } else if (em->parsed()) {
            p.emit(in, or_default(out, artifact::kModule));
        } else if (va->parsed()) {
            p.validate(in);
        } else if (sim->parsed()) {
            p.simulate(module_path, or_default(out, artifact::kEvents),
                       fhir.empty() ? std::nullopt : std::optional(fhir));
        } else if (ev->parsed()) {
            p.evaluate(source, events, or_default(out, artifact::kReportJson), or_default(text, artifact::kReportText),
                       plots.empty() ? std::nullopt : std::optional(plots));
        } else if (run->parsed() || self->parsed()) {
            try {
                p.run_all();
            } catch (...) {
                stage_logged = p.failed_stage().has_value();
                throw;
            }
            if (self->parsed()) {
                std::ifstream report(default_path(config, artifact::kReportText));
                std::cout << report.rdbuf();
            }
        } else if (show->parsed()) {
            std::cout << config_to_json(config) << "digest " << p.digest() << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        if (!stage_logged) spdlog::error("{} failed: {}", stage, e.what());
        if (code == kExitPrivacyGate) spdlog::error("privacy gate closed; no rules or module written");
        return code;
    }
}

}  // namespace oncosynth
