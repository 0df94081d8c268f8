#include <set>

#include "doctest.h"
#include "oncosynth/errors.hpp"
#include "oncosynth/module.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace oncosynth;
using oncosynth::test::make_timeline;

namespace {

GmfState state(std::string name, StateKind kind, Transition t = {}) {
    GmfState s;
    s.name = std::move(name);
    s.kind = kind;
    s.transition = std::move(t);
    return s;
}

GmfModule chain_module() {
    GmfModule m;
    m.name = "chain";
    m.states.push_back(state("Initial", StateKind::initial, DirectTransition{"Wait"}));
    GmfState wait = state("Wait", StateKind::delay, DirectTransition{"Terminal"});
    wait.delay = DelaySpec{};
    m.states.push_back(wait);
    m.states.push_back(state("Terminal", StateKind::terminal));
    return m;
}

bool has_violation_containing(const GmfModule& m, const std::string& needle) {
    for (const auto& v : validate(m)) {
        if (v.find(needle) != std::string::npos) return true;
    }
    return false;
}

std::multiset<double> module_probabilities(const GmfModule& m) {
    std::multiset<double> out;
    for (const auto& s : m.states) {
        if (const auto* d = std::get_if<DistributedTransition>(&s.transition)) {
            for (const auto& b : d->branches) out.insert(b.probability);
        }
    }
    return out;
}

std::multiset<double> extraction_probabilities(const ExtractionResult& x) {
    std::multiset<double> out;
    for (const auto& [gender, rules] : x.genders) {
        for (const auto& [icd10, p] : rules.diagnosis_probabilities) out.insert(p);
        for (const auto& [from, row] : rules.transitions) {
            if (from.size() < 2 || from.back().type == EventType::death) continue;
            if (row.size() == 1 && row.begin()->second.probability == 1.0) continue;
            for (const auto& [to, stat] : row) out.insert(stat.probability);
        }
    }
    return out;
}

void check_path_properties(const GmfModule& m) {
    const auto paths = oracle::enumerate_paths(m, 64);
    CHECK_FALSE(paths.empty());
    for (const auto& path : paths) {
        std::map<StateKind, int> n;
        for (const auto& name : path) ++n[m.find(name)->kind];
        CHECK(n[StateKind::procedure] <= 1);
        CHECK(n[StateKind::medication_order] <= 1);
        CHECK(n[StateKind::careplan_start] <= 1);
        CHECK(n[StateKind::procedure] + n[StateKind::medication_order] + n[StateKind::careplan_start] <= 3);
    }
}

}  // namespace

TEST_CASE("emit: minimal chain for one localization with only deaths") {
    std::vector<CaseTimeline> tls;
    for (int off : {100, 250, 400}) {
        tls.push_back(make_timeline(Gender::female, 24000 + off, "C71.3", {{EventKind::death(), off}}));
    }
    const GmfModule m = emit(extract(tls));
    CHECK(validate(m).empty());
    CHECK(m.states.size() == 7);
    const auto census = state_census(m);
    CHECK(census.at(StateKind::delay) == 2);
    CHECK(census.at(StateKind::condition_onset) == 1);
    CHECK(census.at(StateKind::death) == 1);
    // Male has no cases: its branch of the gender split goes straight to Terminal.
    const auto& split = std::get<ConditionalTransition>(m.find("Initial")->transition);
    CHECK(split.branches[0].gender == Gender::male);
    CHECK(split.branches[0].target == "Terminal");
    CHECK(split.branches[1].target == "Simple_Localization_Female_1");
    const GmfState* survival = m.find("Delay_Survival_1");
    REQUIRE(survival != nullptr);
    CHECK(survival->delay->type == DelaySpec::Type::exponential);
    CHECK(survival->delay->mean == 250.0);
    const GmfState* age = m.find("Delay_Age_C71_3_Female_1");
    REQUIRE(age != nullptr);
    CHECK(age->delay->type == DelaySpec::Type::gaussian);
    CHECK(age->delay->unit == "years");
}

TEST_CASE("emit: 10-case fixture gives a 0.5 / 0.4 / 0.1 distributed node") {
    const GmfModule m = parse_module_json(module_to_json(emit(extract(test::ten_case_fixture()))));
    const auto& onset = std::get<DistributedTransition>(m.find("ConditionOnset_C71_2_1")->transition);
    REQUIRE(onset.branches.size() == 3);
    std::map<std::string, double> by_target;
    for (const auto& b : onset.branches) by_target[b.target] = b.probability;
    CHECK(by_target.at("Delay_Gap_1") == 0.5);  // surgery after 10..14 days
    CHECK(by_target.at("Delay_Gap_2") == 0.4);  // systemic therapy after 20..23 days
    CHECK(by_target.at("Terminal") == 0.1);     // lost to follow-up on the diagnosis day
    CHECK(std::get<DirectTransition>(m.find("Delay_Gap_1")->transition).target == "Procedure_5_015_0_1");
    CHECK(m.find("Delay_Gap_1")->delay->low == 10);
    CHECK(m.find("Delay_Gap_1")->delay->high == 14);
}

TEST_CASE("emit: two-therapy fixture path set matches hand enumeration") {
    std::vector<CaseTimeline> tls{
        make_timeline(Gender::male, 22000, "C71.2",
                      {{EventKind::surgery("5-015.0"), 10},
                       {EventKind::systemic_start({"Temozolomid"}), 30},
                       {EventKind::systemic_end({"Temozolomid"}), 60},
                       {EventKind::death(), 200}}),
        make_timeline(Gender::male, 23000, "C71.2", {{EventKind::surgery("5-015.0"), 12}}),
        make_timeline(Gender::male, 24000, "C71.2", {{EventKind::death(), 100}}),
    };
    const GmfModule m = emit(extract(tls));
    CHECK(validate(m).empty());
    const std::vector<std::string> prefix{"Initial", "Simple_Localization_Male_1", "Delay_Age_C71_2_Male_1",
                                          "ConditionOnset_C71_2_1"};
    auto with_prefix = [&](std::vector<std::string> tail) {
        std::vector<std::string> p = prefix;
        p.insert(p.end(), tail.begin(), tail.end());
        return p;
    };
    const std::set<std::vector<std::string>> expected{
        with_prefix({"Delay_Gap_1", "Procedure_5_015_0_1", "Delay_Gap_2", "MedicationOrder_Temozolomid_1",
                     "Delay_Gap_3", "MedicationEnd_Temozolomid_1", "Delay_Survival_1", "Death"}),
        with_prefix({"Delay_Gap_1", "Procedure_5_015_0_1", "Terminal"}),
        with_prefix({"Delay_Survival_2", "Death"}),
        {"Initial", "Terminal"},
    };
    CHECK(oracle::enumerate_paths(m, 32) == expected);
    CHECK(m.find("Delay_Gap_2")->delay->type == DelaySpec::Type::exact);
    CHECK(m.find("Delay_Gap_2")->delay->quantity == 20.0);
    CHECK(m.find("MedicationEnd_Temozolomid_1")->ends == "MedicationOrder_Temozolomid_1");
    CHECK(state_census(m).at(StateKind::procedure) == 1);
}

TEST_CASE("enumerate_paths: chain, three-way split, cycle") {
    GmfModule m = chain_module();
    CHECK(oracle::enumerate_paths(m, 10).size() == 1);

    m.states[0].transition = DistributedTransition{{{0.2, "Wait"}, {0.3, "A"}, {0.5, "B"}}};
    m.states.push_back(state("A", StateKind::simple, DirectTransition{"Terminal"}));
    m.states.push_back(state("B", StateKind::simple, DirectTransition{"Terminal"}));
    CHECK(validate(m).empty());
    CHECK(oracle::enumerate_paths(m, 10).size() == 3);

    m.states.back().transition = DistributedTransition{{{0.5, "A"}, {0.5, "B"}}};
    CHECK_THROWS_AS(oracle::enumerate_paths(m, 10), oracle::DepthExceeded);
}

TEST_CASE("validate: forced violations name the state and rule") {
    GmfModule m = chain_module();
    CHECK(validate(m).empty());

    GmfModule ghost = m;
    ghost.states[1].transition = DirectTransition{"Ghost"};
    CHECK(has_violation_containing(ghost, "Ghost"));

    GmfModule unnormalized = m;
    unnormalized.states.push_back(state("Split", StateKind::simple,
                                        DistributedTransition{{{0.5, "Terminal"}, {0.4, "Terminal"}}}));
    unnormalized.states[0].transition = DirectTransition{"Split"};
    CHECK(has_violation_containing(unnormalized, "'Split': distributed probabilities sum to 0.9"));

    GmfModule orphan = m;
    orphan.states.push_back(state("Orphan", StateKind::simple, DirectTransition{"Terminal"}));
    CHECK(has_violation_containing(orphan, "'Orphan': unreachable"));

    GmfModule trap = m;
    trap.states[0].transition = DistributedTransition{{{0.5, "Wait"}, {0.5, "Loop"}}};
    trap.states.push_back(state("Loop", StateKind::simple, DirectTransition{"Loop"}));
    CHECK(has_violation_containing(trap, "'Loop': cannot reach a Terminal"));

    GmfModule dup = m;
    dup.states.push_back(dup.states[1]);
    CHECK(has_violation_containing(dup, "duplicate"));

    GmfModule no_delay = m;
    no_delay.states[1].delay.reset();
    CHECK(has_violation_containing(no_delay, "Delay state without delay"));

    GmfModule bad_end = m;
    GmfState end = state("End", StateKind::medication_end, DirectTransition{"Terminal"});
    end.ends = "Wait";
    bad_end.states.push_back(end);
    bad_end.states[1].transition = DirectTransition{"End"};
    CHECK(has_violation_containing(bad_end, "mismatched"));
}

TEST_CASE("emit: invalid extraction is rejected") {
    ExtractionResult x = extract(test::ten_case_fixture());
    x.genders.at(Gender::male).diagnosis_probabilities.clear();
    CHECK_THROWS_AS(emit(x), EmissionError);
    x = extract(test::ten_case_fixture());
    x.genders.at(Gender::male).transitions.begin()->second.begin()->second.probability = 0.7;
    CHECK_THROWS_AS(emit(x), EmissionError);
}

TEST_CASE("property: emitted modules validate, keep path limits, copy probabilities, round-trip") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const Dataset d = seed % 2 ? test::small_vocabulary_dataset(seed, 60) : test::random_dataset(seed, 40);
        const auto tls = build_timelines(d).timelines;
        if (tls.empty()) continue;
        const ExtractionResult x = extract(tls);
        EmitOptions options;
        options.stamps = {{"seed", std::to_string(seed)}};
        const GmfModule m = emit(x, options);
        CHECK(validate(m).empty());
        check_path_properties(m);
        CHECK(module_probabilities(m) == extraction_probabilities(x));
        const std::string json = module_to_json(m);
        const GmfModule back = parse_module_json(json);
        CHECK(back == m);
        CHECK(module_to_json(back) == json);
        CHECK(module_probabilities(back) == extraction_probabilities(x));
        CHECK(emit(x, options) == m);
    }
}

TEST_CASE("module json: rejects unsupported vocabulary") {
    CHECK_THROWS_AS(parse_module_json("[]"), DataError);
    CHECK_THROWS_AS(parse_module_json(R"({"name":"x","states":{"A":{"type":"Encounter"}}})"), DataError);
    CHECK_THROWS_AS(parse_module_json(R"({"name":"x","states":{"A":{"type":"Simple","foo":1}}})"), DataError);
    CHECK(sanitize_identifier("5-015.0") == "5_015_0");
    CHECK(icd10_display("C71.2") == "Malignant neoplasm: Temporal lobe");
}
