#include "oncosynth/cohort_mapper.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "oncosynth/errors.hpp"
#include "oncosynth/random.hpp"

namespace oncosynth {

std::vector<std::string> record_violations(const RegistryRecord& record) {
    std::vector<std::string> issues;
    const std::string who = "record '" + record.record_id + "'";
    auto add = [&](const std::string& what) { issues.push_back(who + ": " + what); };

    if (record.record_id.empty()) {
        add("empty record id");
    }
    if (record.age_group.lo < 0 || record.age_group.lo >= record.age_group.hi) {
        add(fmt::format("invalid age group [{}, {})", record.age_group.lo, record.age_group.hi));
    }
    if (record.diagnosis_year < 1800 || record.diagnosis_year > 9999) {
        add(fmt::format("implausible diagnosis year {}", record.diagnosis_year));
    }
    if (!is_valid_icd10(record.icd10)) {
        add("ICD-10 code '" + record.icd10 + "' does not match C7x.y");
    }

    std::int64_t latest = 0;
    auto offset = [&](std::int64_t value, const char* what) {
        if (value < 0) {
            add(fmt::format("negative {} offset {}", what, value));
        }
        latest = std::max(latest, value);
    };
    for (const auto& s : record.surgeries) {
        if (s.ops.empty()) {
            add("surgery without OPS code");
        }
        offset(s.offset_days, "surgery");
    }
    for (const auto& t : record.systemic_therapies) {
        if (t.substances.empty()) {
            add("systemic therapy without substances");
        }
        offset(t.start_days, "systemic start");
        if (t.end_days) {
            offset(*t.end_days, "systemic end");
            if (*t.end_days < t.start_days) {
                add("systemic therapy ends before it starts");
            }
        }
    }
    for (const auto& t : record.radiotherapies) {
        offset(t.start_days, "radiotherapy start");
        if (t.end_days) {
            offset(*t.end_days, "radiotherapy end");
            if (*t.end_days < t.start_days) {
                add("radiotherapy ends before it starts");
            }
        }
    }
    if (record.death_offset) {
        if (*record.death_offset < 0) {
            add("negative death offset");
        } else if (*record.death_offset < latest) {
            add(fmt::format("death offset {} precedes a therapy offset {}", *record.death_offset,
                            latest));
        }
    }
    return issues;
}

std::pair<Date, Date> birth_date_bounds(AgeGroup group, Date diagnosis) {
    // Age is monotone non-increasing in the birth date, so start near the
    // boundary and walk day by day until the age condition flips.
    Date latest = add_days(diagnosis, -static_cast<std::int64_t>(group.lo * kDaysPerYear) + 3);
    while (age_in_years(latest, diagnosis) < group.lo) {
        latest = add_days(latest, -1);
    }
    Date earliest = add_days(diagnosis, -static_cast<std::int64_t>(group.hi * kDaysPerYear) - 3);
    while (age_in_years(earliest, diagnosis) >= group.hi) {
        earliest = add_days(earliest, 1);
    }
    return {earliest, latest};
}

Dataset map_to_obds(std::span<const RegistryRecord> records, std::uint64_t seed) {
    std::vector<std::string> issues;
    for (const auto& r : records) {
        auto more = record_violations(r);
        issues.insert(issues.end(), more.begin(), more.end());
    }
    if (issues.empty()) {
        std::vector<std::string_view> ids;
        for (const auto& r : records) {
            ids.push_back(r.record_id);
        }
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 1; i < ids.size(); ++i) {
            if (ids[i] == ids[i - 1]) {
                issues.push_back("duplicate record id '" + std::string(ids[i]) + "'");
            }
        }
    }
    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }

    Dataset dataset;
    dataset.patients.reserve(records.size());
    for (std::size_t index = 0; index < records.size(); ++index) {
        const RegistryRecord& rec = records[index];
        RandomStream rng(seed, index, StreamDomain::record_mapping);

        const Date year_start = first_day_of_year(rec.diagnosis_year);
        const Date year_end = last_day_of_year(rec.diagnosis_year);
        const Date diagnosis = add_days(year_start, rng.uniform_int(0, days_between(year_start,
                                                                                    year_end)));
        const auto [earliest, latest] = birth_date_bounds(rec.age_group, diagnosis);
        const Date birth = add_days(earliest, rng.uniform_int(0, days_between(earliest, latest)));

        dataset.patients.push_back({rec.record_id, rec.gender, birth});

        std::vector<ObdsReport> reports;
        auto at = [&](std::int64_t offset) { return add_days(diagnosis, offset); };
        reports.push_back({rec.record_id, diagnosis, Diagnosis{rec.icd10}});
        for (const auto& s : rec.surgeries) {
            reports.push_back({rec.record_id, at(s.offset_days), Surgery{s.ops}});
        }
        int n = 0;
        for (const auto& t : rec.systemic_therapies) {
            const std::string id = "S" + std::to_string(++n);
            reports.push_back({rec.record_id, at(t.start_days), SystemicTherapyStart{t.substances, id}});
            if (t.end_days) {
                reports.push_back({rec.record_id, at(*t.end_days), SystemicTherapyEnd{id}});
            }
        }
        n = 0;
        for (const auto& t : rec.radiotherapies) {
            const std::string id = "R" + std::to_string(++n);
            reports.push_back({rec.record_id, at(t.start_days), RadiotherapyStart{id}});
            if (t.end_days) {
                reports.push_back({rec.record_id, at(*t.end_days), RadiotherapyEnd{id}});
            }
        }
        if (rec.death_offset) {
            reports.push_back({rec.record_id, at(*rec.death_offset), Death{}});
        }
        std::stable_sort(reports.begin(), reports.end(), report_chronological_less);
        for (auto& r : reports) {
            dataset.reports.push_back(std::move(r));
        }
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Ground truth

std::vector<std::string> ground_truth_violations(const GroundTruthSpec& spec) {
    std::vector<std::string> issues;
    if (spec.cohort_size == 0) {
        issues.emplace_back("cohort_size must be positive");
    }
    if (!(spec.male_fraction >= 0.0 && spec.male_fraction <= 1.0)) {
        issues.emplace_back("male_fraction must lie in [0, 1]");
    }
    if (spec.diagnosis_year_min > spec.diagnosis_year_max) {
        issues.emplace_back("diagnosis year range is empty");
    }
    for (Gender g : {Gender::male, Gender::female}) {
        const bool needed = g == Gender::male ? spec.male_fraction > 0.0 : spec.male_fraction < 1.0;
        if (!needed) {
            continue;
        }
        const auto loc = spec.localization_probabilities.find(g);
        if (loc == spec.localization_probabilities.end() || loc->second.empty()) {
            issues.push_back(fmt::format("no localization probabilities for {}", to_string(g)));
        } else {
            double sum = 0.0;
            for (const auto& [code, p] : loc->second) {
                if (!is_valid_icd10(code)) {
                    issues.push_back("localization '" + code + "' does not match C7x.y");
                }
                if (!(p > 0.0)) {
                    issues.push_back(fmt::format("localization {} has non-positive probability", code));
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                issues.push_back(fmt::format("localization probabilities for {} sum to {}",
                                             to_string(g), sum));
            }
        }
        const auto age = spec.age.find(g);
        if (age == spec.age.end()) {
            issues.push_back(fmt::format("no age distribution for {}", to_string(g)));
        } else if (!(age->second.mean_years > 0.0) || !(age->second.std_years > 0.0)) {
            issues.push_back(fmt::format("age distribution for {} needs positive mean and std",
                                         to_string(g)));
        }
    }
    if (!(spec.default_survival_mean_days > 0.0)) {
        for (const auto& [loc_gender, probs] : spec.localization_probabilities) {
            for (const auto& [code, p] : probs) {
                if (!spec.survival_mean_days.contains(code)) {
                    issues.push_back("no survival mean for " + code + " and no default");
                }
            }
        }
    }
    for (const auto& [code, mean] : spec.survival_mean_days) {
        if (!(mean > 0.0)) {
            issues.push_back("survival mean for " + code + " must be positive");
        }
    }

    std::map<std::string, const TherapyItem*> items;
    for (const auto& item : spec.therapy_items) {
        if (item.id.empty() || item.id == kMenuDeath || item.id == kMenuEnd ||
            item.id == kMenuDiagnosis) {
            issues.push_back("therapy item id '" + item.id + "' is empty or reserved");
        }
        if (!items.emplace(item.id, &item).second) {
            issues.push_back("duplicate therapy item '" + item.id + "'");
        }
        if (item.type == TherapyType::surgery && item.ops.empty()) {
            issues.push_back("surgery item '" + item.id + "' has no OPS code");
        }
        if (item.type == TherapyType::systemic && item.substances.empty()) {
            issues.push_back("systemic item '" + item.id + "' has no substances");
        }
        if (item.duration_min_days < 0 || item.duration_min_days > item.duration_max_days) {
            issues.push_back("therapy item '" + item.id + "' has an invalid duration range");
        }
    }
    if (!spec.menu.contains(std::string(kMenuDiagnosis))) {
        issues.emplace_back("therapy menu has no 'diagnosis' entry");
    }
    for (const auto& [from, transitions] : spec.menu) {
        if (from != kMenuDiagnosis && !items.contains(from)) {
            issues.push_back("therapy menu entry '" + from + "' is not a therapy item");
        }
        double sum = 0.0;
        for (const auto& t : transitions) {
            if (t.target != kMenuDeath && t.target != kMenuEnd && !items.contains(t.target)) {
                issues.push_back("menu transition " + from + " -> " + t.target +
                                 " targets an unknown item");
            }
            if (t.probability < 0.0) {
                issues.push_back("menu transition " + from + " -> " + t.target +
                                 " has negative probability");
            }
            if (t.delay_min_days < 0 || t.delay_min_days > t.delay_max_days) {
                issues.push_back("menu transition " + from + " -> " + t.target +
                                 " has an invalid delay range");
            }
            sum += t.probability;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            issues.push_back(fmt::format("menu transitions from {} sum to {}", from, sum));
        }
    }
    for (const auto& item : spec.therapy_items) {
        if (!spec.menu.contains(item.id)) {
            issues.push_back("therapy item '" + item.id + "' has no outgoing menu entry");
        }
    }
    return issues;
}

namespace {

template <class Map>
const typename Map::key_type& sample_key(const Map& probabilities, RandomStream& rng) {
    const double u = rng.uniform01();
    double cumulative = 0.0;
    for (const auto& [key, p] : probabilities) {
        cumulative += p;
        if (u < cumulative) {
            return key;
        }
    }
    return probabilities.rbegin()->first;
}

const MenuTransition& sample_transition(const std::vector<MenuTransition>& options,
                                        RandomStream& rng) {
    const double u = rng.uniform01();
    double cumulative = 0.0;
    for (const auto& t : options) {
        cumulative += t.probability;
        if (u < cumulative) {
            return t;
        }
    }
    return options.back();
}

double sample_age(const AgeDistributionSpec& spec, RandomStream& rng) {
    double age = 0.0;
    if (spec.shape == AgeShape::normal) {
        age = rng.normal(spec.mean_years, spec.std_years);
    } else {
        const double sigma2 = std::log1p((spec.std_years * spec.std_years) /
                                         (spec.mean_years * spec.mean_years));
        age = rng.lognormal(std::log(spec.mean_years) - sigma2 / 2.0, std::sqrt(sigma2));
        if (spec.shape == AgeShape::lognormal_left) age = 2.0 * spec.mean_years - age;
    }
    return std::clamp(age, 0.0, 119.99);
}

}  // namespace

std::string_view age_shape_name(AgeShape shape) {
    switch (shape) {
        case AgeShape::normal: return "normal";
        case AgeShape::lognormal: return "lognormal";
        case AgeShape::lognormal_left: return "lognormal_left";
    }
    return "normal";
}

std::optional<AgeShape> parse_age_shape(std::string_view name) {
    for (AgeShape s : {AgeShape::normal, AgeShape::lognormal, AgeShape::lognormal_left}) {
        if (age_shape_name(s) == name) return s;
    }
    return std::nullopt;
}

GroundTruthCohort generate_ground_truth(const GroundTruthSpec& spec) {
    if (auto issues = ground_truth_violations(spec); !issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    std::map<std::string, const TherapyItem*> items;
    for (const auto& item : spec.therapy_items) {
        items.emplace(item.id, &item);
    }

    GroundTruthCohort cohort;
    cohort.records.reserve(spec.cohort_size);
    const int width = static_cast<int>(std::to_string(spec.cohort_size).size());
    for (std::size_t i = 0; i < spec.cohort_size; ++i) {
        RandomStream rng(spec.seed, i, StreamDomain::ground_truth);
        RegistryRecord rec;
        rec.record_id = fmt::format("GT{:0{}d}", i + 1, width);
        rec.gender = rng.bernoulli(spec.male_fraction) ? Gender::male : Gender::female;
        rec.icd10 = sample_key(spec.localization_probabilities.at(rec.gender), rng);
        const double age = sample_age(spec.age.at(rec.gender), rng);
        const int lo = static_cast<int>(std::floor(age / 5.0)) * 5;
        rec.age_group = {lo, lo + 5};
        rec.diagnosis_year = static_cast<int>(
            rng.uniform_int(spec.diagnosis_year_min, spec.diagnosis_year_max));

        const auto survival = spec.survival_mean_days.find(rec.icd10);
        const double survival_mean = survival != spec.survival_mean_days.end()
                                         ? survival->second
                                         : spec.default_survival_mean_days;

        std::string state(kMenuDiagnosis);
        std::int64_t clock = 0;
        // The menu may loop; a fixed step budget keeps generation finite.
        for (int step = 0; step < 32; ++step) {
            const MenuTransition& next = sample_transition(spec.menu.at(state), rng);
            if (next.target == kMenuDeath) {
                rec.death_offset = clock + std::llround(rng.exponential(survival_mean));
                break;
            }
            if (next.target == kMenuEnd) {
                break;
            }
            clock += rng.uniform_int(next.delay_min_days, next.delay_max_days);
            const TherapyItem& item = *items.at(next.target);
            switch (item.type) {
                case TherapyType::surgery:
                    rec.surgeries.push_back({item.ops, clock});
                    break;
                case TherapyType::systemic: {
                    const std::int64_t end =
                        clock + rng.uniform_int(item.duration_min_days, item.duration_max_days);
                    rec.systemic_therapies.push_back({item.substances, clock, end});
                    clock = end;
                    break;
                }
                case TherapyType::radiotherapy: {
                    const std::int64_t end =
                        clock + rng.uniform_int(item.duration_min_days, item.duration_max_days);
                    rec.radiotherapies.push_back({clock, end});
                    clock = end;
                    break;
                }
            }
            state = next.target;
        }
        cohort.records.push_back(std::move(rec));
    }
    cohort.dataset = map_to_obds(cohort.records, spec.seed);
    return cohort;
}

}  // namespace oncosynth
