#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>

#include <fmt/core.h>

#include "oncosynth/errors.hpp"
#include "oncosynth/module.hpp"

namespace oncosynth {

namespace {

constexpr std::pair<StateKind, std::string_view> kKindNames[] = {
    {StateKind::initial, "Initial"},
    {StateKind::simple, "Simple"},
    {StateKind::condition_onset, "ConditionOnset"},
    {StateKind::procedure, "Procedure"},
    {StateKind::medication_order, "MedicationOrder"},
    {StateKind::medication_end, "MedicationEnd"},
    {StateKind::careplan_start, "CarePlanStart"},
    {StateKind::careplan_end, "CarePlanEnd"},
    {StateKind::delay, "Delay"},
    {StateKind::death, "Death"},
    {StateKind::terminal, "Terminal"},
};

bool needs_codes(StateKind k) {
    return k == StateKind::condition_onset || k == StateKind::procedure || k == StateKind::medication_order ||
           k == StateKind::careplan_start;
}

}  // namespace

std::string_view state_kind_name(StateKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

StateKind parse_state_kind(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw DataError("unsupported state type '" + std::string(name) + "'");
}

std::vector<std::string> transition_targets(const GmfState& state) {
    std::vector<std::string> out;
    if (const auto* d = std::get_if<DirectTransition>(&state.transition)) {
        out.push_back(d->target);
    } else if (const auto* dist = std::get_if<DistributedTransition>(&state.transition)) {
        for (const auto& b : dist->branches) out.push_back(b.target);
    } else if (const auto* c = std::get_if<ConditionalTransition>(&state.transition)) {
        for (const auto& b : c->branches) out.push_back(b.target);
    }
    return out;
}

const GmfState* GmfModule::find(std::string_view state_name) const {
    for (const auto& s : states) {
        if (s.name == state_name) return &s;
    }
    return nullptr;
}

std::map<StateKind, std::size_t> state_census(const GmfModule& module) {
    std::map<StateKind, std::size_t> census;
    for (const auto& s : module.states) ++census[s.kind];
    return census;
}

std::vector<std::string> validate(const GmfModule& module) {
    std::vector<std::string> issues;
    auto issue = [&issues](const std::string& state, const std::string& rule) {
        issues.push_back(fmt::format("state '{}': {}", state, rule));
    };

    std::unordered_map<std::string, const GmfState*> by_name;
    std::size_t initials = 0, terminals = 0;
    for (const auto& s : module.states) {
        if (s.name.empty()) issues.emplace_back("state with empty name");
        if (!by_name.emplace(s.name, &s).second) issue(s.name, "duplicate state name");
        initials += s.kind == StateKind::initial;
        terminals += s.kind == StateKind::terminal;
    }
    if (initials != 1) issues.push_back(fmt::format("module has {} Initial states, expected 1", initials));
    if (terminals == 0) issues.emplace_back("module has no Terminal state");

    for (const auto& s : module.states) {
        const bool terminal = s.kind == StateKind::terminal;
        if (terminal != std::holds_alternative<std::monostate>(s.transition)) {
            issue(s.name, terminal ? "Terminal state must not have a transition" : "missing transition");
        }
        for (const auto& target : transition_targets(s)) {
            if (!by_name.contains(target)) issue(s.name, "transition to unknown state '" + target + "'");
        }
        if (const auto* dist = std::get_if<DistributedTransition>(&s.transition)) {
            double sum = 0.0;
            for (const auto& b : dist->branches) {
                if (!(b.probability >= 0.0 && b.probability <= 1.0)) {
                    issue(s.name, fmt::format("probability {} outside [0,1]", b.probability));
                }
                sum += b.probability;
            }
            if (dist->branches.empty() || std::abs(sum - 1.0) > 1e-9) {
                issue(s.name, fmt::format("distributed probabilities sum to {}, not 1", sum));
            }
        }
        if (const auto* c = std::get_if<ConditionalTransition>(&s.transition)) {
            for (std::size_t i = 0; i < c->branches.size(); ++i) {
                if (!c->branches[i].gender && i + 1 != c->branches.size()) {
                    issue(s.name, "unconditional branch must come last");
                }
            }
            if (c->branches.empty()) issue(s.name, "conditional transition without branches");
        }
        if ((s.kind == StateKind::delay) != s.delay.has_value()) {
            issue(s.name, s.kind == StateKind::delay ? "Delay state without delay" : "delay on non-Delay state");
        }
        if (s.delay) {
            const DelaySpec& d = *s.delay;
            if (d.unit != "days" && d.unit != "years") issue(s.name, "unit must be days or years");
            switch (d.type) {
                case DelaySpec::Type::gaussian:
                    if (!(d.std > 0.0) || !(d.mean >= 0.0)) issue(s.name, "gaussian needs mean >= 0 and std > 0");
                    break;
                case DelaySpec::Type::exponential:
                    if (!(d.mean > 0.0)) issue(s.name, "exponential needs mean > 0");
                    break;
                case DelaySpec::Type::range:
                    if (d.low < 0 || d.low > d.high) issue(s.name, "range needs 0 <= low <= high");
                    break;
                case DelaySpec::Type::exact:
                    if (!(d.quantity >= 0.0)) issue(s.name, "exact delay must be >= 0");
                    break;
            }
        }
        if (needs_codes(s.kind) && s.codes.empty()) issue(s.name, "missing codes");
        if (s.kind == StateKind::medication_end || s.kind == StateKind::careplan_end) {
            const auto it = by_name.find(s.ends);
            const StateKind opener =
                s.kind == StateKind::medication_end ? StateKind::medication_order : StateKind::careplan_start;
            if (it == by_name.end() || it->second->kind != opener) {
                issue(s.name, "ends unknown or mismatched state '" + s.ends + "'");
            }
        } else if (!s.ends.empty()) {
            issue(s.name, "only end states may reference a start state");
        }
    }

    // Forward reachability from Initial.
    std::set<std::string> seen;
    std::deque<const GmfState*> queue;
    for (const auto& s : module.states) {
        if (s.kind == StateKind::initial) {
            seen.insert(s.name);
            queue.push_back(&s);
        }
    }
    while (!queue.empty()) {
        const GmfState* s = queue.front();
        queue.pop_front();
        for (const auto& t : transition_targets(*s)) {
            const auto it = by_name.find(t);
            if (it != by_name.end() && seen.insert(t).second) queue.push_back(it->second);
        }
    }
    // Backward reachability from Terminal states.
    std::unordered_map<std::string, std::vector<const GmfState*>> preds;
    for (const auto& s : module.states) {
        for (const auto& t : transition_targets(s)) preds[t].push_back(&s);
    }
    std::set<std::string> finishing;
    for (const auto& s : module.states) {
        if (s.kind == StateKind::terminal) {
            finishing.insert(s.name);
            queue.push_back(&s);
        }
    }
    while (!queue.empty()) {
        const GmfState* s = queue.front();
        queue.pop_front();
        for (const GmfState* p : preds[s->name]) {
            if (finishing.insert(p->name).second) queue.push_back(p);
        }
    }
    for (const auto& s : module.states) {
        if (!seen.contains(s.name)) issue(s.name, "unreachable from Initial");
        if (!finishing.contains(s.name)) issue(s.name, "cannot reach a Terminal state");
    }
    return issues;
}

}  // namespace oncosynth
