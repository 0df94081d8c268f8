#pragma once

#include <map>
#include <optional>
#include <string>

#include "oncosynth/config.hpp"
#include "oncosynth/errors.hpp"

namespace oncosynth {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitPrivacyGate = 3,
    kExitData = 4,
    kExitInternal = 5,
};

/// Raised when the privacy audit fails in front of rule extraction.
class PrivacyGateError : public Error {
public:
    using Error::Error;
};

/// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kRegistry = "registry.tsv";
inline constexpr const char* kDataset = "dataset.xml";
inline constexpr const char* kFiltered = "filtered.xml";
inline constexpr const char* kAuditJson = "audit.json";
inline constexpr const char* kAuditText = "audit.txt";
inline constexpr const char* kTimelines = "timelines.tsv";
inline constexpr const char* kRulesJson = "rules.json";
inline constexpr const char* kRulesText = "rules.txt";
inline constexpr const char* kModule = "module.json";
inline constexpr const char* kEvents = "events.tsv";
inline constexpr const char* kFhir = "fhir.ndjson";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kPlotDir = "plots";
}  // namespace artifact

/// Shared state of the stages of one invocation.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    const PipelineConfig& config() const { return config_; }
    const std::string& digest() const { return digest_; }
    /// {"config_digest": ..., "seed": ...}
    const std::map<std::string, std::string>& stamps() const { return stamps_; }

    void ground_truth(const std::string& out_tsv) const;
    void map(const std::string& in_tsv, const std::string& out_xml) const;
    void filter(const std::string& in_xml, const std::string& out_xml) const;
    /// Writes the reports, then throws PrivacyGateError if the audit fails.
    void audit(const std::string& in_xml, const std::string& out_json, const std::string& out_text) const;
    void timelines(const std::string& in_xml, const std::string& out_tsv) const;
    /// Filters rare localizations, audits (gate) and extracts. Nothing is
    /// written when the gate closes.
    void extract(const std::string& in_xml, const std::string& out_json, const std::string& out_text) const;
    void emit(const std::string& in_rules, const std::string& out_module) const;
    /// Throws ValidationError listing the violations.
    void validate(const std::string& in_module) const;
    void simulate(const std::string& in_module, const std::string& out_events,
                  const std::optional<std::string>& out_fhir) const;
    void evaluate(const std::string& source_xml, const std::string& events, const std::string& out_json,
                  const std::string& out_text, const std::optional<std::string>& plot_dir) const;

    /// Runs the configured stages under config.output_dir, chaining them
    /// through the artifact files. Checks up front that every stage input
    /// exists or is produced by an earlier stage.
    void run_all() const;
    /// Set when a stage of run_all() threw (the error is already logged).
    std::optional<Stage> failed_stage() const { return failed_stage_; }

private:
    std::string stamp_line() const;
    std::string stamp_json(const std::string& json_text) const;

    PipelineConfig config_;
    std::string digest_;
    std::map<std::string, std::string> stamps_;
    mutable std::optional<Stage> failed_stage_;
};

/// Maps an exception thrown by a stage to its exit code.
int exit_code_for(const std::exception& error);

/// Runs every configured stage; logs the failing stage and returns the exit
/// code instead of throwing.
int run_pipeline(const PipelineConfig& config);

/// Command-line entry point; see docs/cli.md.
int cli_main(int argc, char** argv);

/// Built-in round-trip configuration: {C71.2: 0.7, C71.9: 0.3}, ages
/// N(62, 8) male and N(65, 9) female, exponential survival with mean 400
/// days, surgery with probability 0.6 after 7 to 30 days, 5000 cases,
/// 50000 simulated patients.
PipelineConfig self_test_config();

}  // namespace oncosynth
