#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oncosynth/obds.hpp"
#include "oncosynth/rules.hpp"

namespace oncosynth {

enum class StateKind {
    initial,
    simple,
    condition_onset,
    procedure,
    medication_order,
    medication_end,
    careplan_start,
    careplan_end,
    delay,
    death,
    terminal,
};

/// JSON "type" value: "Initial", "ConditionOnset", "CarePlanEnd", ...
std::string_view state_kind_name(StateKind kind);
StateKind parse_state_kind(std::string_view name);

struct Code {
    std::string system;
    std::string code;
    std::string display;
    bool operator==(const Code&) const = default;
};

struct DelaySpec {
    enum class Type { gaussian, exponential, range, exact };
    Type type = Type::exact;
    double mean = 0.0;  // gaussian, exponential
    double std = 0.0;   // gaussian
    std::int64_t low = 0, high = 0;  // range
    double quantity = 0.0;           // exact
    std::string unit = "days";       // "days" or "years"
    bool operator==(const DelaySpec&) const = default;
};

struct DirectTransition {
    std::string target;
    bool operator==(const DirectTransition&) const = default;
};

struct DistributedBranch {
    double probability = 0.0;
    std::string target;
    bool operator==(const DistributedBranch&) const = default;
};

struct DistributedTransition {
    std::vector<DistributedBranch> branches;
    bool operator==(const DistributedTransition&) const = default;
};

/// A branch without a gender is the unconditional fallback.
struct GenderBranch {
    std::optional<Gender> gender;
    std::string target;
    bool operator==(const GenderBranch&) const = default;
};

struct ConditionalTransition {
    std::vector<GenderBranch> branches;
    bool operator==(const ConditionalTransition&) const = default;
};

using Transition = std::variant<std::monostate, DirectTransition, DistributedTransition, ConditionalTransition>;

struct GmfState {
    std::string name;
    StateKind kind = StateKind::simple;
    std::vector<Code> codes;
    std::optional<DelaySpec> delay;
    /// Name of the MedicationOrder / CarePlanStart state a MedicationEnd /
    /// CarePlanEnd state closes.
    std::string ends;
    Transition transition;
    bool operator==(const GmfState&) const = default;
};

/// Every target a state's transition can lead to, in declaration order.
std::vector<std::string> transition_targets(const GmfState& state);

struct ModuleMetadata {
    std::string generator;
    std::string source_digest;
    /// The module is a pure function of the rules; simulation seeds do not
    /// enter it.
    bool seed_independent = true;
    /// Free-form provenance stamps (config digest, seed, ...).
    std::map<std::string, std::string> stamps;
    bool operator==(const ModuleMetadata&) const = default;
};

struct GmfModule {
    std::string name;
    std::vector<std::string> remarks;
    ModuleMetadata metadata;
    /// In emission order; names are unique.
    std::vector<GmfState> states;

    const GmfState* find(std::string_view state_name) const;
    bool operator==(const GmfModule&) const = default;
};

/// Empty iff the module is well formed: unique names, one Initial, a
/// Terminal, resolvable targets, normalized distributions, valid delay
/// parameters, every state reachable from Initial and able to reach a
/// Terminal. Each line names the state and the rule.
std::vector<std::string> validate(const GmfModule& module);

std::map<StateKind, std::size_t> state_census(const GmfModule& module);

/// Module JSON with keys in a fixed order; byte-identical for equal modules.
std::string module_to_json(const GmfModule& module);
/// Throws DataError on malformed JSON or unknown vocabulary; does not
/// validate the graph.
GmfModule parse_module_json(std::string_view text);

struct EmitOptions {
    std::string module_name = "Primary brain tumors";
    std::map<std::string, std::string> stamps;
};

/// Builds the state machine: Initial -> gender split -> localization choice
/// -> age delay -> ConditionOnset -> therapy tree -> Death or Terminal.
/// Probabilities are copied unchanged. Throws EmissionError when the
/// extraction violates its invariants.
GmfModule emit(const ExtractionResult& extraction, const EmitOptions& options = {});

/// Replaces every character outside [A-Za-z0-9] with '_'.
std::string sanitize_identifier(std::string_view text);

/// "Malignant neoplasm: Temporal lobe" for C71.2, generic text otherwise.
std::string icd10_display(std::string_view icd10);

}  // namespace oncosynth
