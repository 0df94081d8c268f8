#include "oncosynth/rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "oncosynth/digest.hpp"
#include "oncosynth/errors.hpp"
#include "oncosynth/version.hpp"

namespace oncosynth {

std::string pathway_label(const Pathway& pathway) {
    std::string out;
    for (const auto& kind : pathway) {
        if (!out.empty()) out += " > ";
        out += event_label(kind);
    }
    return out;
}

Pathway parse_pathway_label(std::string_view label) {
    Pathway out;
    std::size_t from = 0;
    while (from <= label.size()) {
        const auto sep = label.find(" > ", from);
        out.push_back(parse_event_label(label.substr(from, sep == label.npos ? label.npos : sep - from)));
        if (sep == label.npos) break;
        from = sep + 3;
    }
    return out;
}

bool DelayModel::degenerate() const {
    return kind == DelayKind::exponential ? mean <= 0.0 : min == max;
}

const GaussianFit& GenderRules::age_model_for(const std::string& icd10) const {
    if (auto it = age_by_localization.find(icd10); it != age_by_localization.end()) {
        return it->second;
    }
    return age.value();
}

std::map<Pathway, DelayModel> ExtractionResult::survival_models(Gender gender) const {
    std::map<Pathway, DelayModel> out;
    if (auto g = genders.find(gender); g != genders.end()) {
        for (const auto& [key, model] : g->second.delays) {
            if (key.second.type == EventType::death) out.emplace(key.first, model);
        }
    }
    return out;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
    GaussianFit fit;
    fit.sample_count = samples.size();
    if (samples.empty()) return fit;
    fit.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    const bool all_equal = std::all_of(samples.begin(), samples.end(),
                                       [&](double x) { return x == samples.front(); });
    if (samples.size() < 2 || all_equal) {
        fit.mean = all_equal ? samples.front() : fit.mean;
        return fit;
    }
    double ss = 0.0;
    for (double x : samples) ss += (x - fit.mean) * (x - fit.mean);
    fit.std = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return fit;
}

namespace {

struct GenderAccumulator {
    std::vector<double> ages;
    std::map<std::string, std::vector<double>> ages_by_localization;
    std::map<std::pair<Pathway, EventKind>, std::vector<std::int64_t>> gaps;
};

DelayModel fit_delay(const EventKind& to, const std::vector<std::int64_t>& gaps) {
    DelayModel m;
    m.sample_count = gaps.size();
    if (to.type == EventType::death) {
        m.kind = DelayKind::exponential;
        double sum = 0.0;
        for (auto g : gaps) sum += static_cast<double>(g);
        m.mean = sum / static_cast<double>(gaps.size());
    } else {
        m.kind = DelayKind::uniform;
        const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
        m.min = *lo;
        m.max = *hi;
    }
    return m;
}

}  // namespace

ExtractionResult extract(std::span<const CaseTimeline> timelines, const ExtractionOptions& options) {
    if (timelines.empty()) {
        throw DataError("rule extraction needs at least one timeline");
    }
    ExtractionResult result;
    result.generator_version = std::string(kGeneratorVersion);
    result.source_digest = sha256_hex(timelines_to_table(timelines));
    result.timeline_count = timelines.size();
    result.min_localization_samples = options.min_localization_samples;

    std::map<Gender, GenderAccumulator> acc;
    for (const auto& tl : timelines) {
        if (tl.events.size() < 3 || tl.events[1].kind.type != EventType::diagnosis) {
            throw DataError("timeline of patient '" + tl.patient_id + "' lacks Start, Diagnosis, End");
        }
        GenderRules& rules = result.genders[tl.gender];
        GenderAccumulator& a = acc[tl.gender];
        ++rules.case_count;
        const std::string& icd10 = tl.diagnosis().kind.code;
        ++rules.diagnosis_counts[icd10];
        const double age = static_cast<double>(tl.age_at_diagnosis_days) / kDaysPerYear;
        a.ages.push_back(age);
        a.ages_by_localization[icd10].push_back(age);

        Pathway path;
        for (std::size_t i = 0; i + 1 < tl.events.size(); ++i) {
            path.push_back(tl.events[i].kind);
            const EventKind& to = tl.events[i + 1].kind;
            ++rules.transitions[path][to].count;
            if (i > 0) {
                a.gaps[{path, to}].push_back(days_between(tl.events[i].date, tl.events[i + 1].date));
            }
        }
    }

    for (auto& [gender, rules] : result.genders) {
        GenderAccumulator& a = acc.at(gender);
        for (const auto& [icd10, n] : rules.diagnosis_counts) {
            rules.diagnosis_probabilities[icd10] =
                static_cast<double>(n) / static_cast<double>(rules.case_count);
        }
        rules.age = fit_gaussian(a.ages);
        for (const auto& [icd10, ages] : a.ages_by_localization) {
            if (ages.size() >= options.min_localization_samples) {
                rules.age_by_localization[icd10] = fit_gaussian(ages);
            }
        }
        for (auto& [from, row] : rules.transitions) {
            std::size_t total = 0;
            for (const auto& [to, stat] : row) total += stat.count;
            for (auto& [to, stat] : row) {
                stat.probability = static_cast<double>(stat.count) / static_cast<double>(total);
            }
        }
        for (const auto& [key, gaps] : a.gaps) {
            rules.delays[key] = fit_delay(key.second, gaps);
        }
    }
    return result;
}

std::vector<std::string> extraction_violations(const ExtractionResult& result) {
    std::vector<std::string> issues;
    if (result.genders.empty()) {
        issues.emplace_back("no gender has any case");
    }
    for (const auto& [gender, rules] : result.genders) {
        const auto g = std::string(to_string(gender));
        if (rules.diagnosis_probabilities.empty()) {
            issues.push_back(g + ": empty diagnosis probabilities");
        }
        double sum = 0.0;
        for (const auto& [icd10, p] : rules.diagnosis_probabilities) {
            if (!is_valid_icd10(icd10)) issues.push_back(g + ": invalid localization '" + icd10 + "'");
            if (p < 0.0 || p > 1.0) issues.push_back(g + ": probability of " + icd10 + " outside [0,1]");
            sum += p;
        }
        if (!rules.diagnosis_probabilities.empty() && std::abs(sum - 1.0) > 1e-9) {
            issues.push_back(fmt::format("{}: diagnosis probabilities sum to {}", g, sum));
        }
        if (!rules.age) {
            issues.push_back(g + ": missing age model");
        } else if (rules.age->std < 0.0) {
            issues.push_back(g + ": negative age std");
        }
        for (const auto& [icd10, fit] : rules.age_by_localization) {
            if (fit.std < 0.0) issues.push_back(g + ": negative age std for " + icd10);
        }
        for (const auto& [from, row] : rules.transitions) {
            double total = 0.0;
            for (const auto& [to, stat] : row) {
                if (stat.probability < 0.0 || stat.probability > 1.0) {
                    issues.push_back(g + ": probability outside [0,1] on " + pathway_label(from));
                }
                total += stat.probability;
                const bool needs_delay = from.size() > 1 && stat.count > 0;
                const auto d = rules.delays.find({from, to});
                if (needs_delay && d == rules.delays.end()) {
                    issues.push_back(g + ": no delay model for " + pathway_label(from) + " -> " +
                                     event_label(to));
                } else if (d != rules.delays.end()) {
                    const DelayModel& m = d->second;
                    if (m.kind == DelayKind::uniform && (m.min < 0 || m.min > m.max)) {
                        issues.push_back(g + ": bad uniform bounds after " + pathway_label(from));
                    }
                    if (m.kind == DelayKind::exponential && m.mean < 0.0) {
                        issues.push_back(g + ": negative exponential mean after " + pathway_label(from));
                    }
                }
            }
            if (std::abs(total - 1.0) > 1e-9) {
                issues.push_back(fmt::format("{}: outgoing probabilities of {} sum to {}", g,
                                             pathway_label(from), total));
            }
        }
    }
    return issues;
}

}  // namespace oncosynth
