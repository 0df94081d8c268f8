#include "oncosynth/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "oncosynth/obds.hpp"
#include "oncosynth/timeline.hpp"

namespace oncosynth {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read input file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_file(const std::string& path, const std::string& content) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    spdlog::debug("wrote {} ({} bytes)", path, content.size());
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Dataset load_dataset(const std::string& path) {
    Dataset d = parse_obds(read_file(path));
    spdlog::info("read {}: {} patients, {} reports", path, d.patients.size(), d.reports.size());
    return d;
}

std::string census_text(const GmfModule& module) {
    std::string out;
    for (const auto& [kind, n] : state_census(module)) {
        out += fmt::format("{}{} {}", out.empty() ? "" : ", ", n, state_kind_name(kind));
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), digest_(config_digest(config_)) {
    stamps_ = {{"config_digest", digest_}, {"seed", std::to_string(config_.seed)}};
}

std::string Pipeline::stamp_line() const {
    return fmt::format("# config_digest={} seed={}\n", digest_, config_.seed);
}

std::string Pipeline::stamp_json(const std::string& json_text) const {
    auto j = nlohmann::ordered_json::parse(json_text);
    j["stamps"] = stamps_;
    return j.dump(2) + "\n";
}

void Pipeline::ground_truth(const std::string& out_tsv) const {
    const GroundTruthSpec spec = config_.ground_truth_spec();
    const GroundTruthCohort cohort = generate_ground_truth(spec);
    spdlog::info("ground truth: {} records (seed {})", cohort.records.size(), spec.seed);
    write_file(out_tsv, stamp_line() + write_registry_table(cohort.records));
}

void Pipeline::map(const std::string& in_tsv, const std::string& out_xml) const {
    const auto records = read_registry_table(read_file(in_tsv));
    const Dataset d = map_to_obds(records, config_.seed);
    spdlog::info("map: {} records -> {} patients, {} reports", records.size(), d.patients.size(), d.reports.size());
    std::string xml = write_obds(d);
    const auto decl_end = xml.find('\n') + 1;
    xml.insert(decl_end, fmt::format("<!-- config_digest={} seed={} -->\n", digest_, config_.seed));
    write_file(out_xml, xml);
}

void Pipeline::filter(const std::string& in_xml, const std::string& out_xml) const {
    const Dataset d = load_dataset(in_xml);
    const Dataset kept = filter_rare(d, config_.privacy);
    spdlog::info("filter: removed {} patients with excluded localizations, {} remain",
                 d.patients.size() - kept.patients.size(), kept.patients.size());
    std::string xml = write_obds(kept);
    xml.insert(xml.find('\n') + 1, fmt::format("<!-- config_digest={} seed={} -->\n", digest_, config_.seed));
    write_file(out_xml, xml);
}

void Pipeline::audit(const std::string& in_xml, const std::string& out_json, const std::string& out_text) const {
    const Dataset d = load_dataset(in_xml);
    const AuditResult r = oncosynth::audit(d, config_.privacy);
    spdlog::info("audit: {} groups, min group size {} (k = {}), {} excluded, {} undiagnosed", r.group_sizes.size(),
                 r.min_group_size, config_.privacy.k, r.excluded_patients, r.undiagnosed_patients.size());
    write_file(out_json, stamp_json(audit_to_json(r, config_.privacy)));
    write_file(out_text, stamp_line() + audit_to_table(r, config_.privacy));
    if (!r.passes) {
        throw PrivacyGateError(fmt::format("k-anonymity not met: smallest group has {} cases, k = {}",
                                           r.min_group_size, config_.privacy.k));
    }
}

void Pipeline::timelines(const std::string& in_xml, const std::string& out_tsv) const {
    const TimelineBuild b = build_timelines(load_dataset(in_xml));
    spdlog::info("timelines: {} built, {} undiagnosed, {} repeat therapies dropped", b.timelines.size(),
                 b.undiagnosed_patients.size(), b.dropped_repeat_therapies);
    write_file(out_tsv, stamp_line() + timelines_to_table(b.timelines));
}

void Pipeline::extract(const std::string& in_xml, const std::string& out_json, const std::string& out_text) const {
    const Dataset kept = filter_rare(load_dataset(in_xml), config_.privacy);
    const AuditResult r = oncosynth::audit(kept, config_.privacy);
    if (!r.passes) {
        throw PrivacyGateError(fmt::format("k-anonymity not met: smallest group has {} cases, k = {}; "
                                           "rule extraction refused",
                                           r.min_group_size, config_.privacy.k));
    }
    const TimelineBuild b = build_timelines(kept);
    const ExtractionResult rules = oncosynth::extract(b.timelines, config_.extraction);
    std::size_t transitions = 0;
    for (const auto& [g, gr] : rules.genders) {
        for (const auto& [from, row] : gr.transitions) transitions += row.size();
    }
    spdlog::info("extract: {} timelines, {} genders, {} transitions", rules.timeline_count, rules.genders.size(),
                 transitions);
    write_file(out_json, stamp_json(rules_to_json(rules)));
    write_file(out_text, stamp_line() + rules_to_text(rules));
}

void Pipeline::emit(const std::string& in_rules, const std::string& out_module) const {
    const ExtractionResult rules = read_rules_json(read_file(in_rules));
    EmitOptions options;
    options.module_name = config_.module_name;
    options.stamps = stamps_;
    const GmfModule module = oncosynth::emit(rules, options);
    spdlog::info("emit: {} states ({})", module.states.size(), census_text(module));
    write_file(out_module, module_to_json(module));
}

void Pipeline::validate(const std::string& in_module) const {
    const GmfModule module = parse_module_json(read_file(in_module));
    auto issues = oncosynth::validate(module);
    if (!issues.empty()) {
        for (const auto& i : issues) spdlog::error("{}", i);
        throw ValidationError(std::move(issues));
    }
    spdlog::info("validate: {} states, no violations", module.states.size());
}

void Pipeline::simulate(const std::string& in_module, const std::string& out_events,
                        const std::optional<std::string>& out_fhir) const {
    const GmfModule module = parse_module_json(read_file(in_module));
    if (auto issues = oncosynth::validate(module); !issues.empty()) throw ValidationError(std::move(issues));
    const SimulationConfig sim = config_.simulation_config();

    ensure_parent(out_events);
    std::ofstream events(out_events, std::ios::binary | std::ios::trunc);
    if (!events) throw std::runtime_error("cannot write '" + out_events + "'");
    events << stamp_line();
    EventLogWriter log(events, config_.include_plumbing);

    std::optional<std::ofstream> fhir_file;
    std::optional<FhirLiteWriter> fhir;
    if (out_fhir) {
        ensure_parent(*out_fhir);
        fhir_file.emplace(*out_fhir, std::ios::binary | std::ios::trunc);
        if (!*fhir_file) throw std::runtime_error("cannot write '" + *out_fhir + "'");
        fhir.emplace(*fhir_file, stamps_);
    }

    std::size_t patients = 0, deaths = 0;
    oncosynth::simulate(module, sim, [&](const SyntheticPatient& p) {
        log(p);
        if (fhir) (*fhir)(p);
        ++patients;
        if (!p.events.empty() && p.events.back().kind == StateKind::death) ++deaths;
    });
    events.flush();
    if (!events) throw std::runtime_error("write error on '" + out_events + "'");
    spdlog::info("simulate: {} patients ({} deceased), seed {}, {} workers", patients, deaths, sim.seed, sim.workers);
}

void Pipeline::evaluate(const std::string& source_xml, const std::string& events, const std::string& out_json,
                        const std::string& out_text, const std::optional<std::string>& plot_dir) const {
    const Dataset source = filter_rare(load_dataset(source_xml), config_.privacy);
    const TimelineBuild b = build_timelines(source);
    const Cohort source_cohort = cohort_from_timelines(b.timelines);
    std::ifstream in(events, std::ios::binary);
    if (!in) throw ConfigError("cannot read input file '" + events + "'");
    const Cohort synthetic = cohort_from_event_log(in);
    spdlog::info("evaluate: {} source cases, {} synthetic patients", source_cohort.size(), synthetic.size());

    const FidelityReport report = fidelity_report(source_cohort, synthetic, config_.evaluation);
    for (const auto& f : report.frequencies) {
        if (f.flagged) spdlog::warn("{} frequency differs by {:+.2f} pp", f.icd10, f.difference_pp);
    }
    for (const auto& d : report.discrepancies) spdlog::warn("{}", d);
    write_file(out_json, stamp_json(report_to_json(report)));
    write_file(out_text, stamp_line() + report_to_text(report));
    if (plot_dir) {
        for (const auto& [name, table] : plot_tables(report)) {
            write_file((fs::path(*plot_dir) / name).string(), stamp_line() + table);
        }
    }
}

void Pipeline::run_all() const {
    const auto stages = config_.effective_stages();
    const std::set<Stage> selected(stages.begin(), stages.end());
    const fs::path dir(config_.output_dir);
    auto out = [&](const char* name) { return (dir / name).string(); };
    auto has = [&](Stage s) { return selected.contains(s); };

    std::string registry = out(artifact::kRegistry);
    if (!has(Stage::ground_truth) && !config_.input.empty() && !ends_with(config_.input, ".xml")) {
        registry = config_.input;
    }
    std::string dataset = out(artifact::kDataset);
    if (!has(Stage::map) && ends_with(config_.input, ".xml")) dataset = config_.input;
    const std::string cleaned = has(Stage::filter) || !(has(Stage::map) || ends_with(config_.input, ".xml"))
                                    ? out(artifact::kFiltered)
                                    : dataset;

    // Fail fast: every input must exist or come from an earlier stage.
    std::set<std::string> produced;
    auto need = [&](Stage s, const std::string& path) {
        if (!produced.contains(path) && !fs::exists(path)) {
            throw ConfigError(fmt::format("stage '{}' needs '{}', which does not exist and is not produced by an "
                                          "earlier stage",
                                          stage_name(s), path));
        }
    };
    for (Stage s : stages) {
        switch (s) {
            case Stage::ground_truth:
                if (!config_.ground_truth) throw ConfigError("stage 'ground-truth' needs a ground_truth section");
                produced.insert(registry);
                break;
            case Stage::map: need(s, registry); produced.insert(dataset); break;
            case Stage::filter: need(s, dataset); produced.insert(cleaned); break;
            case Stage::audit:
            case Stage::timelines: need(s, cleaned); break;
            case Stage::extract: need(s, cleaned); produced.insert(out(artifact::kRulesJson)); break;
            case Stage::emit: need(s, out(artifact::kRulesJson)); produced.insert(out(artifact::kModule)); break;
            case Stage::validate: need(s, out(artifact::kModule)); break;
            case Stage::simulate: need(s, out(artifact::kModule)); produced.insert(out(artifact::kEvents)); break;
            case Stage::evaluate: need(s, cleaned); need(s, out(artifact::kEvents)); break;
        }
    }

    spdlog::info("config digest {} seed {}", digest_, config_.seed);
    for (Stage s : stages) {
        spdlog::info("stage {}", stage_name(s));
        try {
            switch (s) {
                case Stage::ground_truth: ground_truth(registry); break;
                case Stage::map: map(registry, dataset); break;
                case Stage::filter: filter(dataset, cleaned); break;
                case Stage::audit: audit(cleaned, out(artifact::kAuditJson), out(artifact::kAuditText)); break;
                case Stage::timelines: timelines(cleaned, out(artifact::kTimelines)); break;
                case Stage::extract: extract(cleaned, out(artifact::kRulesJson), out(artifact::kRulesText)); break;
                case Stage::emit: emit(out(artifact::kRulesJson), out(artifact::kModule)); break;
                case Stage::validate: validate(out(artifact::kModule)); break;
                case Stage::simulate:
                    simulate(out(artifact::kModule), out(artifact::kEvents),
                             config_.write_fhir ? std::optional(out(artifact::kFhir)) : std::nullopt);
                    break;
                case Stage::evaluate:
                    evaluate(cleaned, out(artifact::kEvents), out(artifact::kReportJson), out(artifact::kReportText),
                             out(artifact::kPlotDir));
                    break;
            }
        } catch (const std::exception& e) {
            spdlog::error("stage '{}' failed: {}", stage_name(s), e.what());
            failed_stage_ = s;
            throw;
        }
    }
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const PrivacyGateError*>(&error)) return kExitPrivacyGate;
    if (dynamic_cast<const ConfigError*>(&error)) return kExitUsage;
    if (dynamic_cast<const DataError*>(&error)) return kExitData;
    return kExitInternal;
}

int run_pipeline(const PipelineConfig& config) {
    try {
        const Pipeline p(config);
        try {
            p.run_all();
        } catch (const std::exception& e) {
            if (!p.failed_stage()) spdlog::error("{}", e.what());
            throw;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        return exit_code_for(e);
    }
}

PipelineConfig self_test_config() {
    PipelineConfig c;
    c.seed = 20240501;
    c.output_dir = "out/self_test";
    c.simulation.population_size = 50000;
    GroundTruthSpec g;
    g.cohort_size = 5000;
    g.male_fraction = 0.5;
    g.localization_probabilities[Gender::male] = {{"C71.2", 0.7}, {"C71.9", 0.3}};
    g.localization_probabilities[Gender::female] = {{"C71.2", 0.7}, {"C71.9", 0.3}};
    g.age[Gender::male] = {62.0, 8.0, AgeShape::normal};
    g.age[Gender::female] = {65.0, 9.0, AgeShape::normal};
    g.default_survival_mean_days = 400.0;
    g.therapy_items.push_back({"resection", TherapyType::surgery, "5-015.0", {}, 0, 0});
    g.menu[std::string(kMenuDiagnosis)] = {{"resection", 0.6, 7, 30}, {std::string(kMenuDeath), 0.4, 0, 0}};
    g.menu["resection"] = {{std::string(kMenuDeath), 1.0, 0, 0}};
    c.ground_truth = g;
    return c;
}

}  // namespace oncosynth
