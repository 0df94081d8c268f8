#include <charconv>

#include <fmt/core.h>

#include "oncosynth/cohort_mapper.hpp"
#include "oncosynth/errors.hpp"

namespace oncosynth {

namespace {

constexpr std::string_view kHeader =
    "record_id\tgender\tage_group\tdiagnosis_year\ticd10\tsurgeries\tsystemic_therapies\t"
    "radiotherapies\tdeath_offset";

std::vector<std::string_view> split(std::string_view text, char delimiter) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(delimiter, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

class LineError {
public:
    explicit LineError(std::size_t line) : line_(line) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError(fmt::format("registry table line {}: {}", line_, what));
    }

    std::int64_t integer(std::string_view text, const char* field) const {
        std::int64_t value = 0;
        const auto* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, value);
        if (text.empty() || ec != std::errc{} || ptr != end) {
            fail(fmt::format("{} '{}' is not an integer", field, text));
        }
        return value;
    }

private:
    std::size_t line_;
};

std::pair<std::int64_t, std::optional<std::int64_t>> parse_span(std::string_view text,
                                                                const LineError& err) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) {
        err.fail(fmt::format("therapy span '{}' must be start:end", text));
    }
    std::optional<std::int64_t> end;
    if (!parts[1].empty()) {
        end = err.integer(parts[1], "therapy end");
    }
    return {err.integer(parts[0], "therapy start"), end};
}

std::string format_span(std::int64_t start, const std::optional<std::int64_t>& end) {
    return end ? fmt::format("{}:{}", start, *end) : fmt::format("{}:", start);
}

}  // namespace

std::vector<RegistryRecord> read_registry_table(std::string_view text) {
    std::vector<RegistryRecord> records;
    std::size_t line_no = 0;
    bool header_seen = false;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const LineError err(line_no);
        if (!header_seen) {
            if (line != kHeader) {
                err.fail("unexpected header, expected: " + std::string(kHeader));
            }
            header_seen = true;
            continue;
        }
        const auto cols = split(line, '\t');
        if (cols.size() != 9) {
            err.fail(fmt::format("expected 9 tab-separated columns, found {}", cols.size()));
        }
        RegistryRecord rec;
        rec.record_id = std::string(cols[0]);
        try {
            rec.gender = parse_gender(cols[1]);
        } catch (const DataError& e) {
            err.fail(e.what());
        }
        const auto age = split(cols[2], '-');
        if (age.size() != 2) {
            err.fail(fmt::format("age group '{}' must be lo-hi", cols[2]));
        }
        rec.age_group = {static_cast<int>(err.integer(age[0], "age group lower bound")),
                         static_cast<int>(err.integer(age[1], "age group upper bound"))};
        rec.diagnosis_year = static_cast<int>(err.integer(cols[3], "diagnosis year"));
        rec.icd10 = std::string(cols[4]);
        if (!cols[5].empty()) {
            for (auto item : split(cols[5], '|')) {
                const auto parts = split(item, '@');
                if (parts.size() != 2 || parts[0].empty()) {
                    err.fail(fmt::format("surgery '{}' must be OPS@offset", item));
                }
                rec.surgeries.push_back(
                    {std::string(parts[0]), err.integer(parts[1], "surgery offset")});
            }
        }
        if (!cols[6].empty()) {
            for (auto item : split(cols[6], '|')) {
                const auto parts = split(item, '@');
                if (parts.size() != 2 || parts[0].empty()) {
                    err.fail(fmt::format("systemic therapy '{}' must be A+B@start:end", item));
                }
                SystemicEntry entry;
                for (auto s : split(parts[0], '+')) {
                    if (s.empty()) {
                        err.fail(fmt::format("empty substance in '{}'", item));
                    }
                    entry.substances.emplace(s);
                }
                std::tie(entry.start_days, entry.end_days) = parse_span(parts[1], err);
                rec.systemic_therapies.push_back(std::move(entry));
            }
        }
        if (!cols[7].empty()) {
            for (auto item : split(cols[7], '|')) {
                RadiotherapyEntry entry;
                std::tie(entry.start_days, entry.end_days) = parse_span(item, err);
                rec.radiotherapies.push_back(entry);
            }
        }
        if (!cols[8].empty()) {
            rec.death_offset = err.integer(cols[8], "death offset");
        }
        records.push_back(std::move(rec));
    }
    if (!header_seen) {
        throw DataError("registry table is empty (no header line)");
    }
    return records;
}

std::string write_registry_table(std::span<const RegistryRecord> records) {
    std::string out(kHeader);
    out += '\n';
    for (const auto& rec : records) {
        std::string surgeries;
        for (const auto& s : rec.surgeries) {
            surgeries += (surgeries.empty() ? "" : "|") + fmt::format("{}@{}", s.ops, s.offset_days);
        }
        std::string systemic;
        for (const auto& t : rec.systemic_therapies) {
            systemic += (systemic.empty() ? "" : "|") + join_substances(t.substances) + "@" +
                        format_span(t.start_days, t.end_days);
        }
        std::string radio;
        for (const auto& t : rec.radiotherapies) {
            radio += (radio.empty() ? "" : "|") + format_span(t.start_days, t.end_days);
        }
        out += fmt::format("{}\t{}\t{}-{}\t{}\t{}\t{}\t{}\t{}\t{}\n", rec.record_id,
                           to_string(rec.gender), rec.age_group.lo, rec.age_group.hi,
                           rec.diagnosis_year, rec.icd10, surgeries, systemic, radio,
                           rec.death_offset ? std::to_string(*rec.death_offset) : "");
    }
    return out;
}

}  // namespace oncosynth
