#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oncosynth/obds.hpp"

namespace oncosynth {

enum class QuasiIdentifier { gender, icd10_localization, deceased_flag };

std::string_view to_string(QuasiIdentifier qi);
QuasiIdentifier parse_quasi_identifier(std::string_view text);

struct PrivacyPolicy {
    std::size_t k = 10;
    std::vector<QuasiIdentifier> quasi_identifiers{QuasiIdentifier::gender,
                                                   QuasiIdentifier::icd10_localization,
                                                   QuasiIdentifier::deceased_flag};
    std::set<std::string> excluded_localizations{"C71.5", "C71.6", "C71.7", "C72.0"};
};

/// k=10 over gender x localization x deceased with the rare localizations
/// C71.5, C71.6, C71.7 and C72.0 removed.
PrivacyPolicy default_privacy_policy();

std::vector<std::string> policy_violations(const PrivacyPolicy& policy);

/// One value per quasi-identifier, in policy order ("male", "C71.2",
/// "deceased" / "alive").
using GroupKey = std::vector<std::string>;

struct AuditResult {
    std::map<GroupKey, std::size_t> group_sizes;
    std::size_t min_group_size = 0;
    bool passes = false;
    std::vector<GroupKey> offending_groups;
    /// Patients left out of grouping because they have no diagnosis report.
    std::vector<std::string> undiagnosed_patients;
    std::size_t excluded_patients = 0;
};

/// Groups diagnosed, non-excluded patients by the policy's quasi-identifiers.
/// Throws ConfigError for an invalid policy and AuditError when a report
/// names an unknown patient or when no patient is left to group.
AuditResult audit(const Dataset& dataset, const PrivacyPolicy& policy);

/// Copy of `dataset` without patients (and their reports) whose diagnosis
/// localization is excluded by the policy.
Dataset filter_rare(const Dataset& dataset, const PrivacyPolicy& policy);

/// Machine-readable rendering (JSON, stable key order).
std::string audit_to_json(const AuditResult& result, const PrivacyPolicy& policy);
/// Fixed-width text table.
std::string audit_to_table(const AuditResult& result, const PrivacyPolicy& policy);

}  // namespace oncosynth
