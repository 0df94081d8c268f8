#include "oracles.hpp"

namespace oracle {

namespace {

std::string render(const oncosynth::EventKind& k) {
    using oncosynth::EventType;
    std::string subs;
    for (const auto& s : k.substances) subs += (subs.empty() ? "" : "+") + s;
    switch (k.type) {
        case EventType::start: return "Start";
        case EventType::diagnosis: return "Diagnosis[" + k.code + "]";
        case EventType::surgery: return "Surgery[" + k.code + "]";
        case EventType::systemic_start: return "SystemicStart[" + subs + "]";
        case EventType::systemic_end: return "SystemicEnd[" + subs + "]";
        case EventType::radio_start: return "RadioStart";
        case EventType::radio_end: return "RadioEnd";
        case EventType::death: return "Death";
        case EventType::end: return "End";
    }
    return "?";
}

}  // namespace

std::map<TransitionKey, TransitionValue> brute_transitions(
    const std::vector<oncosynth::CaseTimeline>& timelines) {
    std::map<TransitionKey, TransitionValue> table;
    for (const auto& tl : timelines) {
        const std::string gender = tl.gender == oncosynth::Gender::male ? "male" : "female";
        for (std::size_t i = 0; i + 1 < tl.events.size(); ++i) {
            std::string from;
            for (std::size_t k = 0; k <= i; ++k) {
                from += (k == 0 ? "" : " > ") + render(tl.events[k].kind);
            }
            table[{gender, from, render(tl.events[i + 1].kind)}].count++;
        }
    }
    for (auto& [key, value] : table) {
        std::size_t total = 0;
        for (const auto& [other, v] : table) {
            if (std::get<0>(other) == std::get<0>(key) && std::get<1>(other) == std::get<1>(key)) {
                total += v.count;
            }
        }
        value.probability = static_cast<double>(value.count) / static_cast<double>(total);
    }
    return table;
}

}  // namespace oracle
