#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oncosynth/obds.hpp"

namespace oncosynth {

enum class EventType {
    start,
    diagnosis,
    surgery,
    systemic_start,
    systemic_end,
    radio_start,
    radio_end,
    death,
    end,
};

/// State identity used by extraction: two events are the same kind iff type,
/// code and substance set are all equal.
struct EventKind {
    EventType type = EventType::start;
    std::string code;         // ICD-10 for diagnosis, OPS for surgery
    SubstanceSet substances;  // systemic start/end

    bool operator==(const EventKind&) const = default;
    bool operator<(const EventKind& other) const;

    static EventKind start() { return {EventType::start, {}, {}}; }
    static EventKind end() { return {EventType::end, {}, {}}; }
    static EventKind death() { return {EventType::death, {}, {}}; }
    static EventKind diagnosis(std::string icd10) { return {EventType::diagnosis, std::move(icd10), {}}; }
    static EventKind surgery(std::string ops) { return {EventType::surgery, std::move(ops), {}}; }
    static EventKind systemic_start(SubstanceSet s) { return {EventType::systemic_start, {}, std::move(s)}; }
    static EventKind systemic_end(SubstanceSet s) { return {EventType::systemic_end, {}, std::move(s)}; }
    static EventKind radio_start() { return {EventType::radio_start, {}, {}}; }
    static EventKind radio_end() { return {EventType::radio_end, {}, {}}; }
};

std::string_view event_type_name(EventType type);

/// "Start", "Diagnosis[C71.2]", "Surgery[5-015.0]",
/// "SystemicStart[Lomustin+Temozolomid]", "RadioEnd", ...
std::string event_label(const EventKind& kind);
/// Inverse of event_label. Throws DataError.
EventKind parse_event_label(std::string_view label);

/// True for surgery, systemic start and radiotherapy start.
bool is_therapy_start(EventType type);

struct TimelineEvent {
    EventKind kind;
    Date date{};
    bool operator==(const TimelineEvent&) const = default;
};

struct CaseTimeline {
    std::string patient_id;
    Gender gender = Gender::male;
    std::vector<TimelineEvent> events;
    std::int64_t age_at_diagnosis_days = 0;

    /// events[1] is always the diagnosis.
    const TimelineEvent& diagnosis() const { return events.at(1); }
    bool operator==(const CaseTimeline&) const = default;
};

struct TimelineBuild {
    std::vector<CaseTimeline> timelines;
    std::vector<std::string> undiagnosed_patients;
    std::size_t dropped_repeat_therapies = 0;
    std::size_t dropped_pre_diagnosis_events = 0;
};

/// One timeline per diagnosed patient, in dataset patient order:
/// Start (birth), Diagnosis, the first surgery, the first systemic therapy
/// start/end pair, the first radiotherapy start/end pair, Death, End (death
/// date, else latest report date). Therapy events dated before the diagnosis
/// are dropped and counted. Throws DataError for events before birth,
/// reports after death, death before diagnosis, or a therapy ending before
/// it starts.
TimelineBuild build_timelines(const Dataset& dataset);

/// Tab-separated event table: patient_id, gender, event, code, date,
/// days_since_diagnosis.
std::string timelines_to_table(std::span<const CaseTimeline> timelines);

}  // namespace oncosynth
