#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oncosynth/executor.hpp"
#include "oncosynth/timeline.hpp"

namespace oncosynth {

/// What the evaluator needs to know about one case, from either side.
struct CohortCase {
    Gender gender = Gender::male;
    Date date_of_birth{};
    std::string icd10;  // empty: no diagnosis
    Date diagnosis_date{};
    std::optional<std::string> first_surgery;
    std::optional<Date> death_date;
    /// Death date, else the date of the last recorded event (End / Terminal).
    Date last_event_date{};
    bool operator==(const CohortCase&) const = default;
};

using Cohort = std::vector<CohortCase>;

Cohort cohort_from_timelines(std::span<const CaseTimeline> timelines);
CohortCase case_from_patient(const SyntheticPatient& patient);
/// Streams an event log, keeping only the compact case records.
Cohort cohort_from_event_log(std::istream& in);

struct BoxStats {
    double median = 0, q1 = 0, q3 = 0, lower_fence = 0, upper_fence = 0;
    double outlier_fraction = 0;
    double mean = 0, std = 0;
    std::size_t n = 0;
    bool operator==(const BoxStats&) const = default;
};

/// Quartiles by linear interpolation between closest ranks; Tukey fences at
/// 1.5 IQR; outliers lie strictly outside the fences. Throws
/// EvaluationError on an empty sample.
BoxStats box_stats(std::span<const double> values);

struct Histogram {
    double bin_width = 5.0;
    /// (bin lower edge, count), contiguous from the lowest to the highest
    /// occupied bin.
    std::vector<std::pair<double, std::size_t>> bins;
    bool operator==(const Histogram&) const = default;
};

Histogram histogram(std::span<const double> values, double bin_width);

struct KmPoint {
    double time = 0;
    double survival = 1;
    std::size_t at_risk = 0;
    bool operator==(const KmPoint&) const = default;
};

/// Starts at (0, 1, n); one point per distinct death time.
struct SurvivalCurve {
    std::vector<KmPoint> points;
    /// First time with survival <= 0.5, if reached.
    std::optional<double> median() const;
    bool operator==(const SurvivalCurve&) const = default;
};

struct Observation {
    double time = 0;
    bool died = false;
};

/// Product-limit estimator; at tied times deaths are counted before
/// censorings.
SurvivalCurve kaplan_meier(std::span<const Observation> observations);

struct AgeStats {
    BoxStats box;
    Histogram hist;
    bool operator==(const AgeStats&) const = default;
};

struct SurvivalStats {
    std::optional<BoxStats> box;  // deceased cases only
    SurvivalCurve km;
    std::size_t deaths = 0;
    std::size_t censored = 0;
    bool operator==(const SurvivalStats&) const = default;
};

/// Throws EvaluationError when no case has a diagnosis.
std::map<std::string, double> tumor_frequencies(const Cohort& cohort);
/// Ages at diagnosis in years (days / 365.2425).
std::map<std::string, AgeStats> age_stats(const Cohort& cohort, double bin_width = 5.0);
/// Survival in days after diagnosis; cases without death are censored at
/// their last event (day 0 when the diagnosis is the only event).
std::map<std::string, SurvivalStats> survival_stats(const Cohort& cohort);
/// Per localization: OPS code of the first surgery (or "none") -> share.
std::map<std::string, std::map<std::string, double>> pathway_frequencies(const Cohort& cohort);

struct CohortStats {
    std::size_t cases = 0;
    std::size_t diagnosed = 0;
    std::map<std::string, double> frequencies;
    std::map<std::string, AgeStats> ages;
    std::map<std::string, SurvivalStats> survival;
    std::map<std::string, std::map<std::string, double>> pathways;
    bool operator==(const CohortStats&) const = default;
};

struct EvaluationOptions {
    double age_bin_width = 5.0;
    /// Frequency deviations above this many percentage points are flagged.
    double flag_threshold_pp = 2.0;
    /// Adds per-gender sub-reports.
    bool stratify_by_gender = false;
};

CohortStats evaluate(const Cohort& cohort, const EvaluationOptions& options = {});

struct FrequencyRow {
    std::string icd10;
    double source = 0, synthetic = 0, difference_pp = 0;
    bool flagged = false;
};

struct PathwayRow {
    std::string icd10;
    std::string ops;
    double source = 0, synthetic = 0, difference_pp = 0;
};

struct FidelityReport {
    CohortStats source;
    CohortStats synthetic;
    double flag_threshold_pp = 2.0;
    std::vector<FrequencyRow> frequencies;
    std::vector<PathwayRow> pathways;
    /// Localizations seen on one side only, and similar mismatches.
    std::vector<std::string> discrepancies;
    std::map<std::string, FidelityReport> strata;
};

FidelityReport compare(const CohortStats& source, const CohortStats& synthetic,
                       const EvaluationOptions& options = {});
/// evaluate() both cohorts, compare, and add gender strata when asked.
FidelityReport fidelity_report(const Cohort& source, const Cohort& synthetic,
                               const EvaluationOptions& options = {});

std::string report_to_json(const FidelityReport& report);
std::string report_to_text(const FidelityReport& report);
/// File name -> tab-separated contents: frequencies.tsv, age_box.tsv,
/// age_hist.tsv, survival_box.tsv, survival_km.tsv, pathways.tsv.
std::map<std::string, std::string> plot_tables(const FidelityReport& report);

}  // namespace oncosynth
