#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oncosynth/timeline.hpp"

namespace oncosynth {

/// Every event of a case from Start up to and including the current one. The
/// transition "from" state is a whole pathway, not just its last event, so a
/// state knows which therapy types it has already seen.
using Pathway = std::vector<EventKind>;

/// "Start > Diagnosis[C71.2] > Surgery[5-015.0]"
std::string pathway_label(const Pathway& pathway);
Pathway parse_pathway_label(std::string_view label);

struct GaussianFit {
    double mean = 0.0;
    double std = 0.0;  // n-1 denominator; 0 when degenerate
    std::size_t sample_count = 0;
    bool operator==(const GaussianFit&) const = default;
};

enum class DelayKind { exponential, uniform };

struct DelayModel {
    DelayKind kind = DelayKind::uniform;
    double mean = 0.0;  // exponential, days
    std::int64_t min = 0;  // uniform, days
    std::int64_t max = 0;
    std::size_t sample_count = 0;

    /// Exponential with mean 0, or uniform with min == max.
    bool degenerate() const;
    bool operator==(const DelayModel&) const = default;
};

struct TransitionStat {
    std::size_t count = 0;
    double probability = 0.0;
    bool operator==(const TransitionStat&) const = default;
};

using TransitionRow = std::map<EventKind, TransitionStat>;

struct GenderRules {
    std::size_t case_count = 0;
    std::map<std::string, std::size_t> diagnosis_counts;
    std::map<std::string, double> diagnosis_probabilities;
    /// Age at diagnosis in years.
    std::optional<GaussianFit> age;
    std::map<std::string, GaussianFit> age_by_localization;
    std::map<Pathway, TransitionRow> transitions;
    std::map<std::pair<Pathway, EventKind>, DelayModel> delays;

    /// Age model used for a localization: its own when fitted, else the
    /// gender-level one.
    const GaussianFit& age_model_for(const std::string& icd10) const;
    bool operator==(const GenderRules&) const = default;
};

struct ExtractionResult {
    std::string generator_version;
    std::string source_digest;
    std::size_t timeline_count = 0;
    std::size_t min_localization_samples = 30;
    std::map<Gender, GenderRules> genders;

    /// Exponential fits of all transitions into Death, keyed by from-pathway.
    std::map<Pathway, DelayModel> survival_models(Gender gender) const;
    bool operator==(const ExtractionResult&) const = default;
};

struct ExtractionOptions {
    /// Localizations with fewer age samples use the gender-level age model.
    std::size_t min_localization_samples = 30;
};

/// Counts every consecutive event pair of every timeline per gender, with
/// the from-state being the pathway up to the first event of the pair, and
/// fits the delay of each pair: exponential (mean gap) into Death, uniform
/// (min/max gap) otherwise. The Start -> Diagnosis gap is modeled by the
/// Gaussian age fits instead. Throws DataError on an empty timeline list.
ExtractionResult extract(std::span<const CaseTimeline> timelines, const ExtractionOptions& options = {});

/// Sample mean and n-1 standard deviation; std is 0 for fewer than two or
/// all-equal samples.
GaussianFit fit_gaussian(std::span<const double> samples);

/// Invariant violations (normalization, missing delay models, ...), one line
/// each.
std::vector<std::string> extraction_violations(const ExtractionResult& result);

/// rules.json: stable key order, round-trips exactly through read_rules_json.
std::string rules_to_json(const ExtractionResult& result);
/// Throws DataError on malformed input.
ExtractionResult read_rules_json(std::string_view text);
/// Fixed-width tables for review.
std::string rules_to_text(const ExtractionResult& result);

}  // namespace oncosynth
