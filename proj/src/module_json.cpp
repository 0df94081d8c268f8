#include <algorithm>

#include "json.hpp"

#include "oncosynth/errors.hpp"
#include "oncosynth/module.hpp"

namespace oncosynth {

using nlohmann::ordered_json;

namespace {

constexpr int kGmfVersion = 2;

ordered_json state_json(const GmfState& s) {
    ordered_json j;
    j["type"] = std::string(state_kind_name(s.kind));
    if (!s.codes.empty()) {
        auto& codes = j["codes"] = ordered_json::array();
        for (const auto& c : s.codes) {
            codes.push_back({{"system", c.system}, {"code", c.code}, {"display", c.display}});
        }
    }
    if (s.kind == StateKind::medication_end) j["medication_order"] = s.ends;
    if (s.kind == StateKind::careplan_end) j["careplan"] = s.ends;
    if (s.delay) {
        const DelaySpec& d = *s.delay;
        switch (d.type) {
            case DelaySpec::Type::gaussian:
                j["distribution"] = {{"kind", "GAUSSIAN"},
                                     {"parameters", {{"mean", d.mean}, {"standardDeviation", d.std}}}};
                j["unit"] = d.unit;
                break;
            case DelaySpec::Type::exponential:
                j["distribution"] = {{"kind", "EXPONENTIAL"}, {"parameters", {{"mean", d.mean}}}};
                j["unit"] = d.unit;
                break;
            case DelaySpec::Type::range:
                j["range"] = {{"low", d.low}, {"high", d.high}, {"unit", d.unit}};
                break;
            case DelaySpec::Type::exact:
                j["exact"] = {{"quantity", d.quantity}, {"unit", d.unit}};
                break;
        }
    }
    if (const auto* t = std::get_if<DirectTransition>(&s.transition)) {
        j["direct_transition"] = t->target;
    } else if (const auto* t = std::get_if<DistributedTransition>(&s.transition)) {
        auto& arr = j["distributed_transition"] = ordered_json::array();
        for (const auto& b : t->branches) arr.push_back({{"distribution", b.probability}, {"transition", b.target}});
    } else if (const auto* t = std::get_if<ConditionalTransition>(&s.transition)) {
        auto& arr = j["conditional_transition"] = ordered_json::array();
        for (const auto& b : t->branches) {
            ordered_json branch;
            if (b.gender) {
                branch["condition"] = {{"condition_type", "Gender"}, {"gender", *b.gender == Gender::male ? "M" : "F"}};
            }
            branch["transition"] = b.target;
            arr.push_back(std::move(branch));
        }
    }
    return j;
}

void reject_unknown_keys(const std::string& state, const ordered_json& j, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw DataError("state '" + state + "': unsupported key '" + key + "'");
        }
    }
}

GmfState state_from(const std::string& name, const ordered_json& j) {
    reject_unknown_keys(name, j,
                        {"type", "codes", "medication_order", "careplan", "distribution", "unit", "range",
                         "exact", "direct_transition", "distributed_transition", "conditional_transition"});
    GmfState s;
    s.name = name;
    s.kind = parse_state_kind(j.at("type").get<std::string>());
    if (j.contains("codes")) {
        for (const auto& c : j.at("codes")) {
            s.codes.push_back({c.at("system").get<std::string>(), c.at("code").get<std::string>(),
                               c.at("display").get<std::string>()});
        }
    }
    if (j.contains("medication_order")) s.ends = j.at("medication_order").get<std::string>();
    if (j.contains("careplan")) s.ends = j.at("careplan").get<std::string>();
    if (j.contains("distribution")) {
        const auto& dist = j.at("distribution");
        const auto kind = dist.at("kind").get<std::string>();
        DelaySpec d;
        d.unit = j.at("unit").get<std::string>();
        d.mean = dist.at("parameters").at("mean").get<double>();
        if (kind == "GAUSSIAN") {
            d.type = DelaySpec::Type::gaussian;
            d.std = dist.at("parameters").at("standardDeviation").get<double>();
        } else if (kind == "EXPONENTIAL") {
            d.type = DelaySpec::Type::exponential;
        } else {
            throw DataError("state '" + name + "': unsupported distribution kind '" + kind + "'");
        }
        s.delay = d;
    } else if (j.contains("range")) {
        const auto& r = j.at("range");
        DelaySpec d;
        d.type = DelaySpec::Type::range;
        d.low = r.at("low").get<std::int64_t>();
        d.high = r.at("high").get<std::int64_t>();
        d.unit = r.at("unit").get<std::string>();
        s.delay = d;
    } else if (j.contains("exact")) {
        const auto& e = j.at("exact");
        DelaySpec d;
        d.type = DelaySpec::Type::exact;
        d.quantity = e.at("quantity").get<double>();
        d.unit = e.at("unit").get<std::string>();
        s.delay = d;
    }
    if (j.contains("direct_transition")) {
        s.transition = DirectTransition{j.at("direct_transition").get<std::string>()};
    } else if (j.contains("distributed_transition")) {
        DistributedTransition t;
        for (const auto& b : j.at("distributed_transition")) {
            t.branches.push_back({b.at("distribution").get<double>(), b.at("transition").get<std::string>()});
        }
        s.transition = std::move(t);
    } else if (j.contains("conditional_transition")) {
        ConditionalTransition t;
        for (const auto& b : j.at("conditional_transition")) {
            GenderBranch branch;
            branch.target = b.at("transition").get<std::string>();
            if (b.contains("condition")) {
                const auto& c = b.at("condition");
                if (c.at("condition_type").get<std::string>() != "Gender") {
                    throw DataError("state '" + name + "': only Gender conditions are supported");
                }
                branch.gender = parse_gender(c.at("gender").get<std::string>());
            }
            t.branches.push_back(std::move(branch));
        }
        s.transition = std::move(t);
    }
    return s;
}

}  // namespace

std::string module_to_json(const GmfModule& module) {
    ordered_json j;
    j["name"] = module.name;
    j["remarks"] = module.remarks;
    j["gmf_version"] = kGmfVersion;
    j["metadata"] = {{"generator", module.metadata.generator},
                     {"source_digest", module.metadata.source_digest},
                     {"seed_independent", module.metadata.seed_independent},
                     {"stamps", module.metadata.stamps}};
    auto& states = j["states"] = ordered_json::object();
    for (const auto& s : module.states) {
        states[s.name] = state_json(s);
    }
    return j.dump(2) + "\n";
}

GmfModule parse_module_json(std::string_view text) {
    try {
        const ordered_json j = ordered_json::parse(text);
        GmfModule m;
        m.name = j.at("name").get<std::string>();
        if (j.contains("remarks")) m.remarks = j.at("remarks").get<std::vector<std::string>>();
        if (j.contains("metadata")) {
            const auto& md = j.at("metadata");
            m.metadata.generator = md.value("generator", "");
            m.metadata.source_digest = md.value("source_digest", "");
            m.metadata.seed_independent = md.value("seed_independent", false);
            if (md.contains("stamps")) {
                m.metadata.stamps = md.at("stamps").get<std::map<std::string, std::string>>();
            }
        }
        for (const auto& [name, state] : j.at("states").items()) {
            m.states.push_back(state_from(name, state));
        }
        return m;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("malformed module file: ") + e.what());
    }
}

}  // namespace oncosynth
