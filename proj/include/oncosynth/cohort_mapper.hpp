#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oncosynth/obds.hpp"

namespace oncosynth {

/// Age interval [lo, hi) in completed years.
struct AgeGroup {
    int lo = 0;
    int hi = 0;
    bool operator==(const AgeGroup&) const = default;
};

struct SurgeryEntry {
    std::string ops;
    std::int64_t offset_days = 0;
    bool operator==(const SurgeryEntry&) const = default;
};

struct SystemicEntry {
    SubstanceSet substances;
    std::int64_t start_days = 0;
    std::optional<std::int64_t> end_days;
    bool operator==(const SystemicEntry&) const = default;
};

struct RadiotherapyEntry {
    std::int64_t start_days = 0;
    std::optional<std::int64_t> end_days;
    bool operator==(const RadiotherapyEntry&) const = default;
};

/// One case of the relational registry extract. All offsets are days
/// since diagnosis.
struct RegistryRecord {
    std::string record_id;
    Gender gender = Gender::male;
    AgeGroup age_group;
    int diagnosis_year = 0;
    std::string icd10;
    std::vector<SurgeryEntry> surgeries;
    std::vector<SystemicEntry> systemic_therapies;
    std::vector<RadiotherapyEntry> radiotherapies;
    std::optional<std::int64_t> death_offset;

    bool operator==(const RegistryRecord&) const = default;
};

std::vector<std::string> record_violations(const RegistryRecord& record);

/// Earliest and latest birth dates that give an age in `group` on `diagnosis`.
std::pair<Date, Date> birth_date_bounds(AgeGroup group, Date diagnosis);

/// Maps registry records to oBDS reports with fictitious exact dates: a
/// diagnosis date uniform over the diagnosis year and a birth date uniform
/// over all days consistent with the age group. Each record draws from its
/// own stream keyed by (seed, record index). Reports of one patient are in
/// chronological order with the same-day tie-break of
/// report_chronological_less. Throws ValidationError naming the record ids.
Dataset map_to_obds(std::span<const RegistryRecord> records, std::uint64_t seed);

/// Tab-separated registry table; see docs/registry_table.md.
std::vector<RegistryRecord> read_registry_table(std::string_view text);
std::string write_registry_table(std::span<const RegistryRecord> records);

// ---------------------------------------------------------------------------
// Parametric ground truth

/// lognormal is right-skewed; lognormal_left mirrors it about the mean.
/// All shapes keep the given mean and standard deviation.
enum class AgeShape { normal, lognormal, lognormal_left };
std::string_view age_shape_name(AgeShape shape);
std::optional<AgeShape> parse_age_shape(std::string_view name);

struct AgeDistributionSpec {
    double mean_years = 0.0;
    double std_years = 0.0;
    AgeShape shape = AgeShape::normal;
};

enum class TherapyType { surgery, systemic, radiotherapy };

struct TherapyItem {
    std::string id;
    TherapyType type = TherapyType::surgery;
    std::string ops;          // surgery only
    SubstanceSet substances;  // systemic only
    int duration_min_days = 0;
    int duration_max_days = 0;
};

/// Reserved menu targets.
inline constexpr std::string_view kMenuDeath = "death";
inline constexpr std::string_view kMenuEnd = "end";
inline constexpr std::string_view kMenuDiagnosis = "diagnosis";

struct MenuTransition {
    std::string target;  // therapy item id, "death" or "end"
    double probability = 0.0;
    int delay_min_days = 0;
    int delay_max_days = 0;
};

/// Known generator parameters for round-trip testing. The therapy menu is a
/// Markov chain starting at "diagnosis"; each therapy item is a state.
struct GroundTruthSpec {
    std::size_t cohort_size = 0;
    std::uint64_t seed = 0;
    double male_fraction = 0.5;
    int diagnosis_year_min = 2010;
    int diagnosis_year_max = 2020;
    std::map<Gender, std::map<std::string, double>> localization_probabilities;
    std::map<Gender, AgeDistributionSpec> age;
    std::map<std::string, double> survival_mean_days;  // per localization
    double default_survival_mean_days = 0.0;
    std::vector<TherapyItem> therapy_items;
    std::map<std::string, std::vector<MenuTransition>> menu;
};

std::vector<std::string> ground_truth_violations(const GroundTruthSpec& spec);

struct GroundTruthCohort {
    std::vector<RegistryRecord> records;
    Dataset dataset;
};

/// Samples spec.cohort_size records and maps them to oBDS. Deterministic in
/// spec.seed. Throws ValidationError if the spec is invalid.
GroundTruthCohort generate_ground_truth(const GroundTruthSpec& spec);

}  // namespace oncosynth
