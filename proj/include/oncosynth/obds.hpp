#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oncosynth/dates.hpp"

namespace oncosynth {

enum class Gender { male, female };

std::string_view to_string(Gender gender);
/// Accepts "male"/"female" (also "m"/"f", any case). Throws DataError.
Gender parse_gender(std::string_view text);

/// Unordered set of active substances; equality of two sets is what makes
/// two systemic therapies the same state.
using SubstanceSet = std::set<std::string>;

/// Canonical "A+B+C" rendering (sorted, since the set is ordered).
std::string join_substances(const SubstanceSet& substances);

struct PatientMaster {
    std::string patient_id;
    Gender gender = Gender::male;
    Date date_of_birth{};

    bool operator==(const PatientMaster&) const = default;
};

struct Diagnosis {
    std::string icd10;
    bool operator==(const Diagnosis&) const = default;
};

struct Surgery {
    std::string ops;
    bool operator==(const Surgery&) const = default;
};

// therapy_id is optional (may be empty); when present it pairs an end report
// with its start report.
struct SystemicTherapyStart {
    SubstanceSet substances;
    std::string therapy_id;
    bool operator==(const SystemicTherapyStart&) const = default;
};

struct SystemicTherapyEnd {
    std::string therapy_id;
    bool operator==(const SystemicTherapyEnd&) const = default;
};

struct RadiotherapyStart {
    std::string therapy_id;
    bool operator==(const RadiotherapyStart&) const = default;
};

struct RadiotherapyEnd {
    std::string therapy_id;
    bool operator==(const RadiotherapyEnd&) const = default;
};

struct Death {
    bool operator==(const Death&) const = default;
};

using ReportPayload = std::variant<Diagnosis, Surgery, SystemicTherapyStart, SystemicTherapyEnd,
                                   RadiotherapyStart, RadiotherapyEnd, Death>;

/// Same-day ordering rank of a payload kind: Diagnosis < Surgery <
/// SystemicStart < RadioStart < SystemicEnd < RadioEnd < Death.
int same_day_rank(const ReportPayload& payload);

/// Element name used in the XML profile ("diagnosis", "surgery", ...).
std::string_view payload_element_name(const ReportPayload& payload);

/// Code used for same-day tie-breaks and display: ICD-10, OPS, joined
/// substances, or empty.
std::string payload_code(const ReportPayload& payload);

struct ObdsReport {
    std::string patient_id;
    Date report_date{};
    ReportPayload payload;

    bool operator==(const ObdsReport&) const = default;
};

/// Strict weak order used wherever reports of one patient are sorted:
/// date, then same_day_rank, then payload_code.
bool report_chronological_less(const ObdsReport& a, const ObdsReport& b);

struct Dataset {
    std::vector<PatientMaster> patients;
    std::vector<ObdsReport> reports;

    bool operator==(const Dataset&) const = default;

    const PatientMaster* find_patient(std::string_view patient_id) const;
};

/// True when `code` has the form C7x.y.
bool is_valid_icd10(std::string_view code);

/// Every invariant violation in `dataset`, one human-readable line each.
/// Empty means valid.
std::vector<std::string> dataset_violations(const Dataset& dataset);

/// Parses the documented oBDS subset profile. Throws ParseError (malformed
/// XML, with line/column), SchemaError (missing or unexpected elements and
/// attributes), ReferentialError (report for an unknown patient) or
/// ValidationError (any other invariant violation).
Dataset parse_obds(std::string_view xml_bytes);

/// Serializes `dataset` to the subset profile. Output is byte-deterministic.
/// Throws ValidationError if the dataset violates an invariant.
std::string write_obds(const Dataset& dataset);

}  // namespace oncosynth
