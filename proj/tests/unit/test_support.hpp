#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "oncosynth/dates.hpp"
#include "oncosynth/obds.hpp"

namespace oncosynth::test {

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(ONCOSYNTH_FIXTURE_DIR) + "/" + name, std::ios::binary);
    if (!in) {
        throw std::runtime_error("missing fixture " + name);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

/// Random valid Dataset; reports are interleaved across patients on purpose.
inline Dataset random_dataset(std::uint64_t seed, int max_patients = 6) {
    std::mt19937_64 rng(seed);
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    Dataset d;
    const int n = pick(0, max_patients);
    for (int i = 0; i < n; ++i) {
        PatientMaster p;
        p.patient_id = "R" + std::to_string(seed % 1000) + "-" + std::to_string(i);
        p.gender = pick(0, 1) == 0 ? Gender::male : Gender::female;
        p.date_of_birth = add_days(parse_iso_date("1930-01-01"), pick(0, 20000));
        d.patients.push_back(p);
    }
    static const char* const ops[] = {"5-015.0", "5-010.2", "5-013.1", "5-021.0"};
    static const char* const subs[] = {"Temozolomid", "Lomustin", "Bevacizumab", "Carmustin"};
    for (const auto& p : d.patients) {
        const Date dx = add_days(p.date_of_birth, pick(15000, 25000));
        if (pick(0, 5) > 0) {
            d.reports.push_back({p.patient_id, dx, Diagnosis{"C71." + std::to_string(pick(0, 9))}});
        }
        const int extra = pick(0, 4);
        for (int k = 0; k < extra; ++k) {
            const Date when = add_days(dx, pick(0, 400));
            switch (pick(0, 5)) {
                case 0: d.reports.push_back({p.patient_id, when, Surgery{ops[pick(0, 3)]}}); break;
                case 1: {
                    SystemicTherapyStart s;
                    s.substances.insert(subs[pick(0, 3)]);
                    if (pick(0, 1) == 1) {
                        s.substances.insert(subs[pick(0, 3)]);
                    }
                    s.therapy_id = pick(0, 1) == 1 ? "S" + std::to_string(k) : "";
                    d.reports.push_back({p.patient_id, when, s});
                    break;
                }
                case 2: d.reports.push_back({p.patient_id, when, SystemicTherapyEnd{}}); break;
                case 3: d.reports.push_back({p.patient_id, when, RadiotherapyStart{"R&1"}}); break;
                default: d.reports.push_back({p.patient_id, when, RadiotherapyEnd{}}); break;
            }
        }
        if (pick(0, 1) == 1) {
            d.reports.push_back({p.patient_id, add_days(dx, 500), Death{}});
        }
    }
    std::shuffle(d.reports.begin(), d.reports.end(), rng);
    return d;
}

}  // namespace oncosynth::test

namespace oncosynth::test {

/// Random dataset over a small vocabulary so that pathways repeat across
/// patients; every patient is diagnosed.
inline Dataset small_vocabulary_dataset(std::uint64_t seed, int patients) {
    std::mt19937_64 rng(seed);
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    Dataset d;
    for (int i = 0; i < patients; ++i) {
        const std::string id = "V" + std::to_string(i);
        const Date birth = add_days(parse_iso_date("1940-01-01"), pick(0, 9000));
        d.patients.push_back({id, pick(0, 2) == 0 ? Gender::female : Gender::male, birth});
        const Date dx = add_days(birth, pick(18000, 24000));
        d.reports.push_back({id, dx, Diagnosis{pick(0, 2) == 0 ? "C71.1" : "C71.2"}});
        int clock = 0;
        for (int step = pick(0, 3); step > 0; --step) {
            clock += pick(0, 40);
            switch (pick(0, 2)) {
                case 0: d.reports.push_back({id, add_days(dx, clock), Surgery{pick(0, 1) ? "5-015.0" : "5-015.1"}}); break;
                case 1: {
                    SubstanceSet s = pick(0, 1) ? SubstanceSet{"Temozolomid"} : SubstanceSet{"Lomustin", "Procarbazin"};
                    d.reports.push_back({id, add_days(dx, clock), SystemicTherapyStart{s, ""}});
                    if (pick(0, 3) > 0) {
                        clock += pick(20, 120);
                        d.reports.push_back({id, add_days(dx, clock), SystemicTherapyEnd{}});
                    }
                    break;
                }
                default:
                    d.reports.push_back({id, add_days(dx, clock), RadiotherapyStart{}});
                    clock += pick(20, 45);
                    d.reports.push_back({id, add_days(dx, clock), RadiotherapyEnd{}});
                    break;
            }
        }
        if (pick(0, 3) > 0) {
            d.reports.push_back({id, add_days(dx, clock + pick(0, 900)), Death{}});
        }
    }
    return d;
}

}  // namespace oncosynth::test

#include "oncosynth/timeline.hpp"

namespace oncosynth::test {

inline const Date kFixtureDiagnosis = parse_iso_date("2018-03-01");

/// Timeline with events at day offsets from a fixed diagnosis date; End
/// defaults to the last event.
inline CaseTimeline make_timeline(Gender g, std::int64_t age_days, const std::string& icd10,
                                  std::vector<std::pair<EventKind, int>> events, std::optional<int> end = {}) {
    static int counter = 0;
    CaseTimeline tl;
    tl.patient_id = "T" + std::to_string(++counter);
    tl.gender = g;
    tl.age_at_diagnosis_days = age_days;
    tl.events.push_back({EventKind::start(), add_days(kFixtureDiagnosis, -age_days)});
    tl.events.push_back({EventKind::diagnosis(icd10), kFixtureDiagnosis});
    int last = 0;
    for (auto& [kind, off] : events) {
        tl.events.push_back({kind, add_days(kFixtureDiagnosis, off)});
        last = off;
    }
    tl.events.push_back({EventKind::end(), add_days(kFixtureDiagnosis, end.value_or(last))});
    return tl;
}

/// 10 male C71.2 cases: 5 -> surgery (then death), 4 -> systemic therapy,
/// 1 -> End.
inline std::vector<CaseTimeline> ten_case_fixture() {
    std::vector<CaseTimeline> out;
    for (int i = 0; i < 5; ++i)
        out.push_back(make_timeline(Gender::male, 22000 + i, "C71.2",
                                    {{EventKind::surgery("5-015.0"), 10 + i}, {EventKind::death(), 300 + 10 * i}}));
    for (int i = 0; i < 4; ++i)
        out.push_back(make_timeline(Gender::male, 23000 + i, "C71.2",
                                    {{EventKind::systemic_start({"Temozolomid"}), 20 + i}}, 200));
    out.push_back(make_timeline(Gender::male, 21000, "C71.2", {}));
    return out;
}

}  // namespace oncosynth::test
