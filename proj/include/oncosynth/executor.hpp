#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "oncosynth/module.hpp"

namespace oncosynth {

struct SimulationConfig {
    std::size_t population_size = 1000;
    std::uint64_t seed = 1;
    /// Probability that a patient is male.
    double gender_split = 0.5;
    Date birth_window_start = parse_iso_date("1920-01-01");
    Date birth_window_end = parse_iso_date("1980-12-31");
    /// Worker threads; output does not depend on this.
    unsigned workers = 1;
    /// Patients simulated per batch before they are handed to the sink.
    std::size_t batch_size = 2048;
    /// Guard against cycles in unvalidated modules.
    std::size_t max_steps = 10000;
};

std::vector<std::string> simulation_config_violations(const SimulationConfig& config);

/// One visited state. Plumbing states (Initial, Simple, Delay) are kept so a
/// patient's record is the full path through the module.
struct SimEvent {
    std::string state_name;
    StateKind kind = StateKind::simple;
    std::string code;
    Date date{};
    bool operator==(const SimEvent&) const = default;
};

/// True for ConditionOnset, Procedure, medication and care plan states and
/// Death.
bool is_clinical(StateKind kind);

struct SyntheticPatient {
    std::size_t patient_index = 0;
    Gender gender = Gender::male;
    Date date_of_birth{};
    std::vector<SimEvent> events;
    bool operator==(const SyntheticPatient&) const = default;
};

using PatientSink = std::function<void(const SyntheticPatient&)>;

/// Simulates `config.population_size` patients and hands each to `sink` in
/// patient-index order. Patient i draws from its own random stream derived
/// from (seed, i), so results do not depend on worker count or batch size.
/// Throws ConfigError for an invalid config and SimulationError when a
/// transition names a missing state or the step limit is hit.
void simulate(const GmfModule& module, const SimulationConfig& config, const PatientSink& sink);

/// Single patient; exposed for tests.
SyntheticPatient simulate_patient(const GmfModule& module, const SimulationConfig& config,
                                  std::size_t patient_index);

/// Converts a sampled delay to whole days: years * 365.2425, clamped at 0,
/// rounded half-up.
std::int64_t delay_to_days(double amount, const std::string& unit);

/// Tab-separated event log, one row per clinical event plus the Terminal
/// row (or every visited state when `include_plumbing`).
class EventLogWriter {
public:
    explicit EventLogWriter(std::ostream& out, bool include_plumbing = false);
    void operator()(const SyntheticPatient& patient);

private:
    std::ostream* out_;
    bool include_plumbing_;
};

inline constexpr const char* kEventLogHeader =
    "patient_index\tgender\tbirth_date\tstate_name\tkind\tcode\tdate\tdays_since_diagnosis";

/// Reads an event log back into patients (only the rows that were written).
/// Leading '#' comment lines are skipped. Throws DataError with the line
/// number on malformed rows.
std::vector<SyntheticPatient> read_event_log(std::istream& in);
/// Streaming form: each patient is handed over once its last row is read.
void for_each_logged_patient(std::istream& in, const PatientSink& sink);

/// One JSON bundle per line: Patient, Condition, Procedure and
/// MedicationStatement-shaped resources carrying only the fields this
/// pipeline fills in. Stamps become meta.tag entries of every bundle.
class FhirLiteWriter {
public:
    explicit FhirLiteWriter(std::ostream& out, std::map<std::string, std::string> stamps = {});
    void operator()(const SyntheticPatient& patient);

private:
    std::ostream* out_;
    std::map<std::string, std::string> stamps_;
};

}  // namespace oncosynth
