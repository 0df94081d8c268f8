#include "oncosynth/privacy.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>

#include "json.hpp"

#include "oncosynth/errors.hpp"

namespace oncosynth {

std::string_view to_string(QuasiIdentifier qi) {
    switch (qi) {
        case QuasiIdentifier::gender: return "gender";
        case QuasiIdentifier::icd10_localization: return "icd10_localization";
        case QuasiIdentifier::deceased_flag: return "deceased_flag";
    }
    return "?";
}

QuasiIdentifier parse_quasi_identifier(std::string_view text) {
    for (auto qi : {QuasiIdentifier::gender, QuasiIdentifier::icd10_localization,
                    QuasiIdentifier::deceased_flag}) {
        if (to_string(qi) == text) {
            return qi;
        }
    }
    throw ConfigError("unknown quasi-identifier '" + std::string(text) + "'");
}

PrivacyPolicy default_privacy_policy() {
    return PrivacyPolicy{};
}

std::vector<std::string> policy_violations(const PrivacyPolicy& policy) {
    std::vector<std::string> issues;
    if (policy.k < 2) {
        issues.emplace_back("k must be at least 2");
    }
    if (policy.quasi_identifiers.empty()) {
        issues.emplace_back("at least one quasi-identifier is required");
    }
    return issues;
}

namespace {

struct PatientFacts {
    const PatientMaster* master = nullptr;
    const std::string* localization = nullptr;
    bool deceased = false;
};

std::unordered_map<std::string_view, PatientFacts> collect_facts(const Dataset& dataset) {
    std::unordered_map<std::string_view, PatientFacts> facts;
    for (const auto& p : dataset.patients) {
        facts[p.patient_id].master = &p;
    }
    for (const auto& r : dataset.reports) {
        const auto it = facts.find(r.patient_id);
        if (it == facts.end()) {
            throw AuditError("report references patient '" + r.patient_id +
                             "' without master data; gender is unknown");
        }
        if (const auto* dx = std::get_if<Diagnosis>(&r.payload)) {
            it->second.localization = &dx->icd10;
        } else if (std::holds_alternative<Death>(r.payload)) {
            it->second.deceased = true;
        }
    }
    return facts;
}

}  // namespace

AuditResult audit(const Dataset& dataset, const PrivacyPolicy& policy) {
    if (auto issues = policy_violations(policy); !issues.empty()) {
        throw ConfigError("invalid privacy policy: " + issues.front());
    }
    const auto facts = collect_facts(dataset);

    AuditResult result;
    for (const auto& p : dataset.patients) {
        const PatientFacts& f = facts.at(p.patient_id);
        if (f.localization == nullptr) {
            result.undiagnosed_patients.push_back(p.patient_id);
            continue;
        }
        if (policy.excluded_localizations.contains(*f.localization)) {
            ++result.excluded_patients;
            continue;
        }
        GroupKey key;
        key.reserve(policy.quasi_identifiers.size());
        for (QuasiIdentifier qi : policy.quasi_identifiers) {
            switch (qi) {
                case QuasiIdentifier::gender: key.emplace_back(to_string(p.gender)); break;
                case QuasiIdentifier::icd10_localization: key.push_back(*f.localization); break;
                case QuasiIdentifier::deceased_flag:
                    key.emplace_back(f.deceased ? "deceased" : "alive");
                    break;
            }
        }
        ++result.group_sizes[key];
    }
    if (result.group_sizes.empty()) {
        throw AuditError("no diagnosed, non-excluded patients to audit");
    }
    result.min_group_size = result.group_sizes.begin()->second;
    for (const auto& [key, count] : result.group_sizes) {
        result.min_group_size = std::min(result.min_group_size, count);
        if (count < policy.k) {
            result.offending_groups.push_back(key);
        }
    }
    result.passes = result.min_group_size >= policy.k;
    return result;
}

Dataset filter_rare(const Dataset& dataset, const PrivacyPolicy& policy) {
    std::unordered_set<std::string_view> dropped;
    for (const auto& r : dataset.reports) {
        if (const auto* dx = std::get_if<Diagnosis>(&r.payload)) {
            if (policy.excluded_localizations.contains(dx->icd10)) {
                dropped.insert(r.patient_id);
            }
        }
    }
    Dataset out;
    for (const auto& p : dataset.patients) {
        if (!dropped.contains(p.patient_id)) {
            out.patients.push_back(p);
        }
    }
    for (const auto& r : dataset.reports) {
        if (!dropped.contains(r.patient_id)) {
            out.reports.push_back(r);
        }
    }
    return out;
}

std::string audit_to_json(const AuditResult& result, const PrivacyPolicy& policy) {
    nlohmann::ordered_json j;
    j["k"] = policy.k;
    auto& qis = j["quasi_identifiers"] = nlohmann::ordered_json::array();
    for (auto qi : policy.quasi_identifiers) {
        qis.push_back(std::string(to_string(qi)));
    }
    j["excluded_localizations"] = policy.excluded_localizations;
    j["passes"] = result.passes;
    j["min_group_size"] = result.min_group_size;
    auto& groups = j["groups"] = nlohmann::ordered_json::array();
    for (const auto& [key, count] : result.group_sizes) {
        nlohmann::ordered_json g;
        g["key"] = key;
        g["count"] = count;
        groups.push_back(std::move(g));
    }
    j["offending_groups"] = result.offending_groups;
    j["undiagnosed_patients"] = result.undiagnosed_patients;
    j["excluded_patients"] = result.excluded_patients;
    return j.dump(2) + "\n";
}

std::string audit_to_table(const AuditResult& result, const PrivacyPolicy& policy) {
    std::vector<std::size_t> widths;
    for (auto qi : policy.quasi_identifiers) {
        widths.push_back(to_string(qi).size());
    }
    for (const auto& [key, count] : result.group_sizes) {
        for (std::size_t i = 0; i < key.size(); ++i) {
            widths[i] = std::max(widths[i], key[i].size());
        }
    }
    std::string out;
    for (std::size_t i = 0; i < policy.quasi_identifiers.size(); ++i) {
        out += fmt::format("{:<{}}  ", to_string(policy.quasi_identifiers[i]), widths[i]);
    }
    out += "count\n";
    for (const auto& [key, count] : result.group_sizes) {
        for (std::size_t i = 0; i < key.size(); ++i) {
            out += fmt::format("{:<{}}  ", key[i], widths[i]);
        }
        out += fmt::format("{:>5}{}\n", count, count < policy.k ? "  < k" : "");
    }
    out += fmt::format("\nk = {}, smallest group = {}: {}\n", policy.k, result.min_group_size,
                       result.passes ? "PASS" : "FAIL");
    if (!result.undiagnosed_patients.empty()) {
        out += fmt::format("{} patient(s) without diagnosis were not grouped\n",
                           result.undiagnosed_patients.size());
    }
    if (result.excluded_patients > 0) {
        out += fmt::format("{} patient(s) with excluded localizations were not grouped\n",
                           result.excluded_patients);
    }
    return out;
}

}  // namespace oncosynth
