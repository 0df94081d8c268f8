#include "oncosynth/timeline.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <tuple>

#include <fmt/core.h>

#include "oncosynth/errors.hpp"

namespace oncosynth {

bool EventKind::operator<(const EventKind& other) const {
    return std::tie(type, code, substances) < std::tie(other.type, other.code, other.substances);
}

std::string_view event_type_name(EventType type) {
    switch (type) {
        case EventType::start: return "Start";
        case EventType::diagnosis: return "Diagnosis";
        case EventType::surgery: return "Surgery";
        case EventType::systemic_start: return "SystemicStart";
        case EventType::systemic_end: return "SystemicEnd";
        case EventType::radio_start: return "RadioStart";
        case EventType::radio_end: return "RadioEnd";
        case EventType::death: return "Death";
        case EventType::end: return "End";
    }
    return "?";
}

std::string event_label(const EventKind& kind) {
    std::string label(event_type_name(kind.type));
    switch (kind.type) {
        case EventType::diagnosis:
        case EventType::surgery: label += "[" + kind.code + "]"; break;
        case EventType::systemic_start:
        case EventType::systemic_end: label += "[" + join_substances(kind.substances) + "]"; break;
        default: break;
    }
    return label;
}

EventKind parse_event_label(std::string_view label) {
    const auto open = label.find('[');
    const std::string_view name = label.substr(0, open);
    std::string_view arg;
    if (open != std::string_view::npos) {
        if (label.back() != ']') {
            throw DataError("malformed event label '" + std::string(label) + "'");
        }
        arg = label.substr(open + 1, label.size() - open - 2);
    }
    for (int t = 0; t <= static_cast<int>(EventType::end); ++t) {
        const auto type = static_cast<EventType>(t);
        if (event_type_name(type) != name) {
            continue;
        }
        EventKind kind{type, {}, {}};
        const bool takes_arg = type == EventType::diagnosis || type == EventType::surgery ||
                               type == EventType::systemic_start || type == EventType::systemic_end;
        if (takes_arg != (open != std::string_view::npos) || (takes_arg && arg.empty())) {
            throw DataError("malformed event label '" + std::string(label) + "'");
        }
        if (type == EventType::diagnosis || type == EventType::surgery) {
            kind.code = std::string(arg);
        } else if (takes_arg) {
            std::size_t from = 0;
            while (true) {
                const auto plus = arg.find('+', from);
                const auto part = arg.substr(from, plus == std::string_view::npos ? arg.npos : plus - from);
                if (part.empty()) {
                    throw DataError("empty substance in label '" + std::string(label) + "'");
                }
                kind.substances.emplace(part);
                if (plus == std::string_view::npos) break;
                from = plus + 1;
            }
        }
        return kind;
    }
    throw DataError("unknown event label '" + std::string(label) + "'");
}

bool is_therapy_start(EventType type) {
    return type == EventType::surgery || type == EventType::systemic_start ||
           type == EventType::radio_start;
}

namespace {

int event_rank(EventType type) {
    switch (type) {
        case EventType::start: return -1;
        case EventType::diagnosis: return 0;
        case EventType::surgery: return 1;
        case EventType::systemic_start: return 2;
        case EventType::radio_start: return 3;
        case EventType::systemic_end: return 4;
        case EventType::radio_end: return 5;
        case EventType::death: return 6;
        case EventType::end: return 7;
    }
    return 8;
}

template <class StartT, class EndT>
std::optional<std::size_t> find_end(const std::vector<const ObdsReport*>& sorted, std::size_t start_at) {
    const auto& id = std::get<StartT>(sorted[start_at]->payload).therapy_id;
    for (std::size_t j = start_at + 1; j < sorted.size(); ++j) {
        if (const auto* e = std::get_if<EndT>(&sorted[j]->payload)) {
            if (id.empty() || e->therapy_id == id) {
                return j;
            }
        }
    }
    return std::nullopt;
}

CaseTimeline build_one(const PatientMaster& patient, std::vector<const ObdsReport*>& reports,
                       TimelineBuild& stats) {
    std::stable_sort(reports.begin(), reports.end(),
                     [](const ObdsReport* a, const ObdsReport* b) { return report_chronological_less(*a, *b); });
    const auto fail = [&](const std::string& what) {
        throw DataError("patient '" + patient.patient_id + "': " + what);
    };

    const ObdsReport* dx = nullptr;
    const ObdsReport* death = nullptr;
    for (const ObdsReport* r : reports) {
        if (r->report_date < patient.date_of_birth) {
            fail("report dated " + format_iso_date(r->report_date) + " precedes birth");
        }
        if (std::holds_alternative<Diagnosis>(r->payload)) dx = r;
        if (std::holds_alternative<Death>(r->payload)) death = r;
    }
    const Date dx_date = dx->report_date;
    if (death != nullptr && death->report_date < dx_date) {
        fail("death precedes diagnosis");
    }
    const Date last_report = reports.back()->report_date;
    if (death != nullptr && last_report > death->report_date) {
        fail("report dated " + format_iso_date(last_report) + " follows death");
    }

    CaseTimeline tl;
    tl.patient_id = patient.patient_id;
    tl.gender = patient.gender;
    tl.age_at_diagnosis_days = days_between(patient.date_of_birth, dx_date);
    tl.events.push_back({EventKind::start(), patient.date_of_birth});
    tl.events.push_back({EventKind::diagnosis(std::get<Diagnosis>(dx->payload).icd10), dx_date});

    bool had_surgery = false, had_systemic = false, had_radio = false;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const ObdsReport& r = *reports[i];
        const bool is_start = std::holds_alternative<Surgery>(r.payload) ||
                              std::holds_alternative<SystemicTherapyStart>(r.payload) ||
                              std::holds_alternative<RadiotherapyStart>(r.payload);
        if (!is_start) {
            continue;
        }
        if (r.report_date < dx_date) {
            ++stats.dropped_pre_diagnosis_events;
            continue;
        }
        if (const auto* s = std::get_if<Surgery>(&r.payload)) {
            if (had_surgery) {
                ++stats.dropped_repeat_therapies;
                continue;
            }
            had_surgery = true;
            tl.events.push_back({EventKind::surgery(s->ops), r.report_date});
        } else if (const auto* s = std::get_if<SystemicTherapyStart>(&r.payload)) {
            if (had_systemic) {
                ++stats.dropped_repeat_therapies;
                continue;
            }
            had_systemic = true;
            tl.events.push_back({EventKind::systemic_start(s->substances), r.report_date});
            if (auto j = find_end<SystemicTherapyStart, SystemicTherapyEnd>(reports, i)) {
                tl.events.push_back({EventKind::systemic_end(s->substances), reports[*j]->report_date});
            }
        } else {
            if (had_radio) {
                ++stats.dropped_repeat_therapies;
                continue;
            }
            had_radio = true;
            tl.events.push_back({EventKind::radio_start(), r.report_date});
            if (auto j = find_end<RadiotherapyStart, RadiotherapyEnd>(reports, i)) {
                tl.events.push_back({EventKind::radio_end(), reports[*j]->report_date});
            }
        }
    }
    if (death != nullptr) {
        tl.events.push_back({EventKind::death(), death->report_date});
    }
    std::stable_sort(tl.events.begin() + 2, tl.events.end(), [](const TimelineEvent& a, const TimelineEvent& b) {
        return std::tuple(a.date, event_rank(a.kind.type)) < std::tuple(b.date, event_rank(b.kind.type));
    });
    tl.events.push_back({EventKind::end(), death != nullptr ? death->report_date : last_report});
    return tl;
}

}  // namespace

TimelineBuild build_timelines(const Dataset& dataset) {
    std::map<std::string_view, std::vector<const ObdsReport*>> by_patient;
    for (const auto& p : dataset.patients) {
        by_patient[p.patient_id];
    }
    for (const auto& r : dataset.reports) {
        const auto it = by_patient.find(r.patient_id);
        if (it == by_patient.end()) {
            throw ReferentialError(r.patient_id);
        }
        it->second.push_back(&r);
    }

    TimelineBuild out;
    for (const auto& p : dataset.patients) {
        auto& reports = by_patient.at(p.patient_id);
        const bool diagnosed = std::any_of(reports.begin(), reports.end(), [](const ObdsReport* r) {
            return std::holds_alternative<Diagnosis>(r->payload);
        });
        if (!diagnosed) {
            out.undiagnosed_patients.push_back(p.patient_id);
            continue;
        }
        out.timelines.push_back(build_one(p, reports, out));
    }
    return out;
}

std::string timelines_to_table(std::span<const CaseTimeline> timelines) {
    std::string out = "patient_id\tgender\tevent\tcode\tdate\tdays_since_diagnosis\n";
    for (const auto& tl : timelines) {
        const Date dx = tl.diagnosis().date;
        for (const auto& e : tl.events) {
            std::string code = e.kind.code;
            if (e.kind.type == EventType::systemic_start || e.kind.type == EventType::systemic_end) {
                code = join_substances(e.kind.substances);
            }
            out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", tl.patient_id, to_string(tl.gender),
                               event_type_name(e.kind.type), code, format_iso_date(e.date),
                               days_between(dx, e.date));
        }
    }
    return out;
}

}  // namespace oncosynth
