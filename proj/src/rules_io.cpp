#include <fmt/core.h>

#include "json.hpp"

#include "oncosynth/errors.hpp"
#include "oncosynth/rules.hpp"

namespace oncosynth {

using nlohmann::ordered_json;

namespace {

ordered_json gaussian_json(const GaussianFit& fit) {
    return ordered_json{{"mean", fit.mean}, {"std", fit.std}, {"n", fit.sample_count}};
}

GaussianFit gaussian_from(const ordered_json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>(), j.at("n").get<std::size_t>()};
}

ordered_json delay_json(const DelayModel& m) {
    if (m.kind == DelayKind::exponential) {
        return ordered_json{{"kind", "exponential"}, {"mean", m.mean}, {"n", m.sample_count}};
    }
    return ordered_json{{"kind", "uniform"}, {"min", m.min}, {"max", m.max}, {"n", m.sample_count}};
}

DelayModel delay_from(const ordered_json& j) {
    DelayModel m;
    const auto kind = j.at("kind").get<std::string>();
    m.sample_count = j.at("n").get<std::size_t>();
    if (kind == "exponential") {
        m.kind = DelayKind::exponential;
        m.mean = j.at("mean").get<double>();
    } else if (kind == "uniform") {
        m.kind = DelayKind::uniform;
        m.min = j.at("min").get<std::int64_t>();
        m.max = j.at("max").get<std::int64_t>();
    } else {
        throw DataError("unknown delay kind '" + kind + "'");
    }
    return m;
}

std::string delay_text(const DelayModel& m) {
    if (m.kind == DelayKind::exponential) {
        return fmt::format("exp(mean {:.1f} d)", m.mean);
    }
    return m.degenerate() ? fmt::format("exact {} d", m.min) : fmt::format("uniform [{}, {}] d", m.min, m.max);
}

}  // namespace

std::string rules_to_json(const ExtractionResult& result) {
    ordered_json j;
    j["generator"] = result.generator_version;
    j["source_digest"] = result.source_digest;
    j["timeline_count"] = result.timeline_count;
    j["min_localization_samples"] = result.min_localization_samples;
    auto& genders = j["genders"] = ordered_json::array();
    for (const auto& [gender, rules] : result.genders) {
        ordered_json g;
        g["gender"] = std::string(to_string(gender));
        g["cases"] = rules.case_count;
        auto& dx = g["diagnoses"] = ordered_json::array();
        for (const auto& [icd10, n] : rules.diagnosis_counts) {
            dx.push_back({{"icd10", icd10}, {"count", n}, {"probability", rules.diagnosis_probabilities.at(icd10)}});
        }
        g["age"] = rules.age ? gaussian_json(*rules.age) : ordered_json(nullptr);
        auto& by_loc = g["age_by_localization"] = ordered_json::object();
        for (const auto& [icd10, fit] : rules.age_by_localization) {
            by_loc[icd10] = gaussian_json(fit);
        }
        auto& tr = g["transitions"] = ordered_json::array();
        for (const auto& [from, row] : rules.transitions) {
            for (const auto& [to, stat] : row) {
                ordered_json t{{"from", pathway_label(from)},
                               {"to", event_label(to)},
                               {"count", stat.count},
                               {"probability", stat.probability}};
                if (auto d = rules.delays.find({from, to}); d != rules.delays.end()) {
                    t["delay"] = delay_json(d->second);
                }
                tr.push_back(std::move(t));
            }
        }
        genders.push_back(std::move(g));
    }
    return j.dump(2) + "\n";
}

ExtractionResult read_rules_json(std::string_view text) {
    try {
        const ordered_json j = ordered_json::parse(text);
        ExtractionResult r;
        r.generator_version = j.at("generator").get<std::string>();
        r.source_digest = j.at("source_digest").get<std::string>();
        r.timeline_count = j.at("timeline_count").get<std::size_t>();
        r.min_localization_samples = j.at("min_localization_samples").get<std::size_t>();
        for (const auto& g : j.at("genders")) {
            const Gender gender = parse_gender(g.at("gender").get<std::string>());
            if (r.genders.contains(gender)) {
                throw DataError("gender listed twice in rules");
            }
            GenderRules& rules = r.genders[gender];
            rules.case_count = g.at("cases").get<std::size_t>();
            for (const auto& d : g.at("diagnoses")) {
                const auto icd10 = d.at("icd10").get<std::string>();
                rules.diagnosis_counts[icd10] = d.at("count").get<std::size_t>();
                rules.diagnosis_probabilities[icd10] = d.at("probability").get<double>();
            }
            if (!g.at("age").is_null()) rules.age = gaussian_from(g.at("age"));
            for (const auto& [icd10, fit] : g.at("age_by_localization").items()) {
                rules.age_by_localization[icd10] = gaussian_from(fit);
            }
            for (const auto& t : g.at("transitions")) {
                const Pathway from = parse_pathway_label(t.at("from").get<std::string>());
                const EventKind to = parse_event_label(t.at("to").get<std::string>());
                rules.transitions[from][to] = {t.at("count").get<std::size_t>(), t.at("probability").get<double>()};
                if (t.contains("delay")) rules.delays[{from, to}] = delay_from(t.at("delay"));
            }
        }
        return r;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("malformed rules file: ") + e.what());
    }
}

std::string rules_to_text(const ExtractionResult& result) {
    std::string out = fmt::format("{}\nsource {}\n{} timelines\n", result.generator_version,
                                  result.source_digest, result.timeline_count);
    for (const auto& [gender, rules] : result.genders) {
        out += fmt::format("\n== {} ({} cases) ==\n\nlocalization  count  probability  age mean  age std  age n\n",
                           to_string(gender), rules.case_count);
        for (const auto& [icd10, n] : rules.diagnosis_counts) {
            const GaussianFit& age = rules.age_model_for(icd10);
            out += fmt::format("{:<12}  {:>5}  {:>11.4f}  {:>8.2f}  {:>7.2f}  {:>5}{}\n", icd10, n,
                               rules.diagnosis_probabilities.at(icd10), age.mean, age.std, age.sample_count,
                               rules.age_by_localization.contains(icd10) ? "" : " (gender level)");
        }
        out += "\ncount  probability  delay  transition\n";
        for (const auto& [from, row] : rules.transitions) {
            if (from.size() == 1) continue;  // Start -> Diagnosis is covered above
            for (const auto& [to, stat] : row) {
                const auto d = rules.delays.find({from, to});
                out += fmt::format("{:>5}  {:>11.4f}  {}  {} -> {}\n", stat.count, stat.probability,
                                   d == rules.delays.end() ? "-" : delay_text(d->second),
                                   pathway_label(from), event_label(to));
            }
        }
    }
    return out;
}

}  // namespace oncosynth
