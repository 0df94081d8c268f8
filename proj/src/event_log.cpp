#include <istream>
#include <optional>
#include <ostream>

#include <fmt/core.h>

#include "json.hpp"

#include "oncosynth/errors.hpp"
#include "oncosynth/executor.hpp"

namespace oncosynth {

namespace {

std::optional<Date> diagnosis_date(const SyntheticPatient& p) {
    for (const auto& e : p.events) {
        if (e.kind == StateKind::condition_onset) return e.date;
    }
    return std::nullopt;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t from = 0;
    while (true) {
        const auto tab = line.find('\t', from);
        out.push_back(line.substr(from, tab == line.npos ? line.npos : tab - from));
        if (tab == line.npos) return out;
        from = tab + 1;
    }
}

}  // namespace

EventLogWriter::EventLogWriter(std::ostream& out, bool include_plumbing)
    : out_(&out), include_plumbing_(include_plumbing) {
    *out_ << kEventLogHeader << '\n';
}

void EventLogWriter::operator()(const SyntheticPatient& p) {
    const auto dx = diagnosis_date(p);
    const std::string birth = format_iso_date(p.date_of_birth);
    std::string buffer;
    for (const auto& e : p.events) {
        if (!include_plumbing_ && !is_clinical(e.kind) && e.kind != StateKind::terminal) continue;
        std::string since;
        if (dx && e.date >= *dx) since = std::to_string(days_between(*dx, e.date));
        buffer += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", p.patient_index, to_string(p.gender), birth,
                              e.state_name, state_kind_name(e.kind), e.code, format_iso_date(e.date), since);
    }
    *out_ << buffer;
}

void for_each_logged_patient(std::istream& in, const PatientSink& sink) {
    std::string line;
    std::size_t line_no = 0;
    bool got = false;
    while ((got = static_cast<bool>(std::getline(in, line)))) {
        ++line_no;
        if (line.empty() || line.front() != '#') break;
    }
    if (!got || line != kEventLogHeader) {
        throw DataError("event log: missing or unexpected header");
    }
    std::optional<SyntheticPatient> current;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto f = split_tabs(line);
            if (f.size() != 8) throw DataError("expected 8 columns, found " + std::to_string(f.size()));
            const std::size_t index = std::stoull(std::string(f[0]));
            if (!current || current->patient_index != index) {
                if (current) sink(*current);
                current.emplace();
                current->patient_index = index;
                current->gender = parse_gender(f[1]);
                current->date_of_birth = parse_iso_date(f[2]);
            }
            current->events.push_back(
                {std::string(f[3]), parse_state_kind(f[4]), std::string(f[5]), parse_iso_date(f[6])});
        } catch (const std::logic_error&) {
            throw DataError(fmt::format("event log line {}: bad patient index", line_no));
        } catch (const DataError& e) {
            throw DataError(fmt::format("event log line {}: {}", line_no, e.what()));
        }
    }
    if (current) sink(*current);
}

std::vector<SyntheticPatient> read_event_log(std::istream& in) {
    std::vector<SyntheticPatient> patients;
    for_each_logged_patient(in, [&](const SyntheticPatient& p) { patients.push_back(p); });
    return patients;
}

FhirLiteWriter::FhirLiteWriter(std::ostream& out, std::map<std::string, std::string> stamps)
    : out_(&out), stamps_(std::move(stamps)) {}

void FhirLiteWriter::operator()(const SyntheticPatient& p) {
    using nlohmann::ordered_json;
    const std::string pid = fmt::format("patient-{}", p.patient_index);
    const ordered_json subject{{"reference", "Patient/" + pid}};
    ordered_json patient{{"resourceType", "Patient"},
                         {"id", pid},
                         {"gender", std::string(to_string(p.gender))},
                         {"birthDate", format_iso_date(p.date_of_birth)}};
    auto entries = ordered_json::array();
    std::optional<std::size_t> open_medication, open_radiotherapy;
    for (const auto& e : p.events) {
        const std::string date = format_iso_date(e.date);
        const std::string id = fmt::format("{}-{}", pid, entries.size() + 1);
        switch (e.kind) {
            case StateKind::condition_onset:
                entries.push_back({{"resourceType", "Condition"},
                                   {"id", id},
                                   {"subject", subject},
                                   {"code", {{"coding", {{{"system", "ICD-10-GM"}, {"code", e.code}}}}}},
                                   {"onsetDateTime", date}});
                break;
            case StateKind::procedure:
                entries.push_back({{"resourceType", "Procedure"},
                                   {"id", id},
                                   {"subject", subject},
                                   {"code", {{"coding", {{{"system", "OPS"}, {"code", e.code}}}}}},
                                   {"performedDateTime", date}});
                break;
            case StateKind::medication_order:
                open_medication = entries.size();
                entries.push_back({{"resourceType", "MedicationStatement"},
                                   {"id", id},
                                   {"subject", subject},
                                   {"medicationCodeableConcept", {{"text", e.code}}},
                                   {"effectivePeriod", {{"start", date}}}});
                break;
            case StateKind::careplan_start:
                open_radiotherapy = entries.size();
                entries.push_back({{"resourceType", "Procedure"},
                                   {"id", id},
                                   {"subject", subject},
                                   {"code", {{"text", "Radiotherapy"}}},
                                   {"performedPeriod", {{"start", date}}}});
                break;
            case StateKind::medication_end:
                if (open_medication) entries[*open_medication]["effectivePeriod"]["end"] = date;
                break;
            case StateKind::careplan_end:
                if (open_radiotherapy) entries[*open_radiotherapy]["performedPeriod"]["end"] = date;
                break;
            case StateKind::death: patient["deceasedDateTime"] = date; break;
            default: break;
        }
    }
    ordered_json bundle{{"resourceType", "Bundle"}, {"type", "collection"}};
    if (!stamps_.empty()) {
        auto tags = ordered_json::array();
        for (const auto& [key, value] : stamps_) tags.push_back({{"system", "oncosynth:" + key}, {"code", value}});
        bundle["meta"] = {{"tag", tags}};
    }
    bundle["entry"] = ordered_json::array();
    bundle["entry"].push_back({{"resource", patient}});
    for (auto& e : entries) bundle["entry"].push_back({{"resource", std::move(e)}});
    *out_ << bundle.dump() << '\n';
}

}  // namespace oncosynth
