#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oncosynth/cohort_mapper.hpp"
#include "oncosynth/evaluator.hpp"
#include "oncosynth/executor.hpp"
#include "oncosynth/module.hpp"
#include "oncosynth/privacy.hpp"
#include "oncosynth/rules.hpp"

namespace oncosynth {

/// Stages in execution order. `run` executes the configured subset in this
/// order.
enum class Stage { ground_truth, map, filter, audit, timelines, extract, emit, validate, simulate, evaluate };

std::string_view stage_name(Stage stage);
/// Throws ConfigError.
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

/// Everything a pipeline run needs; see docs/config.md for the file format.
struct PipelineConfig {
    std::uint64_t seed = 1;
    std::vector<Stage> stages;
    /// Registry table (.tsv) or oBDS XML (.xml). Empty when a ground truth
    /// is configured.
    std::string input;
    std::string output_dir = "out";

    PrivacyPolicy privacy;
    ExtractionOptions extraction;
    std::string module_name = "Primary brain tumors";
    SimulationConfig simulation;
    bool write_fhir = false;
    bool include_plumbing = false;
    EvaluationOptions evaluation;
    std::optional<GroundTruthSpec> ground_truth;
    /// Per-stage seeds; both default to `seed`. Registry mapping always
    /// uses `seed`.
    std::optional<std::uint64_t> simulation_seed;
    std::optional<std::uint64_t> ground_truth_seed;

    SimulationConfig simulation_config() const;
    /// Throws ConfigError when no ground truth is configured.
    GroundTruthSpec ground_truth_spec() const;

    /// Stages to run when `stages` is empty: the full chain, starting from
    /// the ground truth or from `input`.
    std::vector<Stage> effective_stages() const;
};

/// Parses YAML text. Unknown keys, wrong types and invariant violations
/// throw ConfigError naming the offending key.
PipelineConfig parse_config(std::string_view yaml_text);
/// Reads and parses a config file. Throws ConfigError when unreadable.
PipelineConfig load_config(const std::string& path);

/// Canonical JSON rendering of everything that affects artifact contents,
/// with defaults filled in. Stage selection, worker count, batch size and
/// output directory are left out: they do not change any output byte.
std::string config_to_json(const PipelineConfig& config);
/// SHA-256 of config_to_json.
std::string config_digest(const PipelineConfig& config);

std::vector<std::string> config_violations(const PipelineConfig& config);

}  // namespace oncosynth
