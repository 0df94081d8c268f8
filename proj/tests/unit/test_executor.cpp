#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oncosynth/errors.hpp"
#include "oncosynth/executor.hpp"
#include "test_support.hpp"

using namespace oncosynth;

namespace {

GmfState state(std::string name, StateKind kind, Transition t = {}) {
    GmfState s;
    s.name = std::move(name);
    s.kind = kind;
    s.transition = std::move(t);
    return s;
}

GmfModule three_way_module() {
    GmfModule m;
    m.name = "three-way";
    m.states.push_back(state("Initial", StateKind::initial, DirectTransition{"Onset"}));
    GmfState onset = state("Onset", StateKind::condition_onset,
                           DistributedTransition{{{0.5, "Wait"}, {0.4, "Chemo"}, {0.1, "Terminal"}}});
    onset.codes = {{"ICD-10-GM", "C71.2", "x"}};
    m.states.push_back(onset);
    GmfState wait = state("Wait", StateKind::delay, DirectTransition{"Surgery"});
    wait.delay = DelaySpec{DelaySpec::Type::range, 0, 0, 7, 30, 0, "days"};
    m.states.push_back(wait);
    GmfState surgery = state("Surgery", StateKind::procedure, DirectTransition{"Terminal"});
    surgery.codes = {{"OPS", "5-015.0", "x"}};
    m.states.push_back(surgery);
    GmfState chemo = state("Chemo", StateKind::medication_order, DirectTransition{"ChemoEnd"});
    chemo.codes = {{"substances", "Temozolomid", "Temozolomid"}};
    m.states.push_back(chemo);
    GmfState chemo_end = state("ChemoEnd", StateKind::medication_end, DirectTransition{"Terminal"});
    chemo_end.ends = "Chemo";
    m.states.push_back(chemo_end);
    m.states.push_back(state("Terminal", StateKind::terminal));
    return m;
}

std::vector<SyntheticPatient> run_all(const GmfModule& m, const SimulationConfig& c) {
    std::vector<SyntheticPatient> out;
    simulate(m, c, [&](const SyntheticPatient& p) { out.push_back(p); });
    return out;
}

std::string event_log(const GmfModule& m, const SimulationConfig& c, bool plumbing = false) {
    std::ostringstream os;
    EventLogWriter writer(os, plumbing);
    simulate(m, c, [&](const SyntheticPatient& p) { writer(p); });
    return os.str();
}

bool follows_module(const GmfModule& m, const SyntheticPatient& p) {
    if (p.events.empty() || p.events.front().kind != StateKind::initial) return false;
    for (std::size_t i = 0; i + 1 < p.events.size(); ++i) {
        const auto targets = transition_targets(*m.find(p.events[i].state_name));
        if (std::find(targets.begin(), targets.end(), p.events[i + 1].state_name) == targets.end()) return false;
        if (p.events[i + 1].date < p.events[i].date) return false;
    }
    const StateKind last = p.events.back().kind;
    return last == StateKind::terminal || last == StateKind::death;
}

}  // namespace

TEST_CASE("simulate: Initial -> Terminal gives patients without clinical events") {
    GmfModule m;
    m.name = "empty";
    m.states.push_back(state("Initial", StateKind::initial, DirectTransition{"Terminal"}));
    m.states.push_back(state("Terminal", StateKind::terminal));
    SimulationConfig c;
    c.population_size = 10;
    const auto patients = run_all(m, c);
    REQUIRE(patients.size() == 10);
    for (std::size_t i = 0; i < patients.size(); ++i) {
        CHECK(patients[i].patient_index == i);
        CHECK(std::none_of(patients[i].events.begin(), patients[i].events.end(),
                           [](const SimEvent& e) { return is_clinical(e.kind); }));
        CHECK(patients[i].date_of_birth >= c.birth_window_start);
        CHECK(patients[i].date_of_birth <= c.birth_window_end);
    }
}

TEST_CASE("simulate: single p=1 branch yields exactly one diagnosis each") {
    GmfModule m;
    m.name = "single";
    m.states.push_back(state("Initial", StateKind::initial, DistributedTransition{{{1.0, "Onset"}}}));
    GmfState onset = state("Onset", StateKind::condition_onset, DirectTransition{"Terminal"});
    onset.codes = {{"ICD-10-GM", "C71.2", "x"}};
    m.states.push_back(onset);
    m.states.push_back(state("Terminal", StateKind::terminal));
    SimulationConfig c;
    c.population_size = 200;
    for (const auto& p : run_all(m, c)) {
        CHECK(std::count_if(p.events.begin(), p.events.end(), [](const SimEvent& e) {
                  return e.kind == StateKind::condition_onset && e.code == "C71.2";
              }) == 1);
    }
}

TEST_CASE("simulate: 0.5 / 0.4 / 0.1 branch frequencies over 100,000 patients") {
    const GmfModule m = three_way_module();
    REQUIRE(validate(m).empty());
    SimulationConfig c;
    c.population_size = 100000;
    c.seed = 20240611;
    std::map<std::string, std::size_t> n;
    std::int64_t min_gap = 1000, max_gap = -1;
    simulate(m, c, [&](const SyntheticPatient& p) {
        ++n[p.events[2].state_name];
        if (p.events[2].state_name == "Wait") {
            const auto gap = days_between(p.events[1].date, p.events[2].date);
            min_gap = std::min(min_gap, gap);
            max_gap = std::max(max_gap, gap);
        }
    });
    CHECK(std::abs(n["Wait"] / 1e5 - 0.5) <= 0.005);
    CHECK(std::abs(n["Chemo"] / 1e5 - 0.4) <= 0.005);
    CHECK(std::abs(n["Terminal"] / 1e5 - 0.1) <= 0.005);
    // Uniform delays are inclusive of both bounds.
    CHECK(min_gap == 7);
    CHECK(max_gap == 30);
}

TEST_CASE("simulate: worker count and batch size do not change the output") {
    const GmfModule m = emit(extract(build_timelines(test::small_vocabulary_dataset(3, 80)).timelines));
    SimulationConfig c;
    c.population_size = 3000;
    c.seed = 99;
    const std::string one = event_log(m, c, true);
    c.workers = 4;
    c.batch_size = 257;
    CHECK(event_log(m, c, true) == one);
    c.seed = 100;
    CHECK(event_log(m, c, true) != one);
    CHECK(simulate_patient(m, c, 17) == run_all(m, c)[17]);
}

TEST_CASE("simulate: structural conformance, clock monotonicity, therapy multiplicity") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const GmfModule m = emit(extract(build_timelines(test::small_vocabulary_dataset(seed, 60)).timelines));
        SimulationConfig c;
        c.population_size = 500;
        c.seed = seed;
        for (const auto& p : run_all(m, c)) {
            CHECK(follows_module(m, p));
            std::map<StateKind, int> n;
            for (const auto& e : p.events) ++n[e.kind];
            CHECK(n[StateKind::procedure] <= 1);
            CHECK(n[StateKind::medication_order] <= 1);
            CHECK(n[StateKind::careplan_start] <= 1);
            CHECK(n[StateKind::death] <= 1);
        }
    }
}

TEST_CASE("simulate: branch frequencies stay within four standard errors") {
    const GmfModule m = emit(extract(build_timelines(test::small_vocabulary_dataset(11, 200)).timelines));
    SimulationConfig c;
    c.population_size = 60000;
    c.seed = 5;
    std::map<std::pair<std::string, std::string>, std::size_t> taken;
    std::map<std::string, std::size_t> visits;
    simulate(m, c, [&](const SyntheticPatient& p) {
        for (std::size_t i = 0; i + 1 < p.events.size(); ++i) {
            ++visits[p.events[i].state_name];
            ++taken[{p.events[i].state_name, p.events[i + 1].state_name}];
        }
    });
    int checked = 0;
    for (const auto& s : m.states) {
        const auto* d = std::get_if<DistributedTransition>(&s.transition);
        if (!d || visits[s.name] < 10000) continue;
        const double n = static_cast<double>(visits[s.name]);
        for (const auto& b : d->branches) {
            const double freq = static_cast<double>(taken[{s.name, b.target}]) / n;
            CHECK(std::abs(freq - b.probability) <= 4.0 * std::sqrt(b.probability * (1 - b.probability) / n));
            ++checked;
        }
    }
    CHECK(checked >= 4);
}

TEST_CASE("simulate: errors") {
    GmfModule m = three_way_module();
    m.states[3].transition = DirectTransition{"Ghost"};
    SimulationConfig c;
    c.population_size = 50;
    try {
        simulate(m, c, [](const SyntheticPatient&) {});
        FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
        CHECK(std::string(e.what()).find("Ghost") != std::string::npos);
    }
    GmfModule loop = three_way_module();
    loop.states[3].transition = DirectTransition{"Wait"};
    CHECK_THROWS_AS(simulate(loop, c, [](const SyntheticPatient&) {}), SimulationError);
    c.gender_split = 1.5;
    CHECK_THROWS_AS(simulate(three_way_module(), c, [](const SyntheticPatient&) {}), ConfigError);
}

TEST_CASE("delay_to_days rounds half-up and clamps at zero") {
    CHECK(delay_to_days(0.5, "days") == 1);
    CHECK(delay_to_days(0.49, "days") == 0);
    CHECK(delay_to_days(-3.0, "days") == 0);
    CHECK(delay_to_days(1.0, "years") == 365);
    CHECK(delay_to_days(2.0, "years") == 730);  // 730.485
    CHECK(delay_to_days(62.0, "years") == 22645);  // 22645.035
}

TEST_CASE("event log and FHIR-lite output") {
    const GmfModule m = three_way_module();
    SimulationConfig c;
    c.population_size = 40;
    const std::string log = event_log(m, c);
    CHECK(log.rfind(std::string(kEventLogHeader) + "\n", 0) == 0);
    std::istringstream in(log);
    const auto back = read_event_log(in);
    const auto full = run_all(m, c);
    REQUIRE(back.size() == full.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
        std::vector<SimEvent> kept;
        for (const auto& e : full[i].events) {
            if (is_clinical(e.kind) || e.kind == StateKind::terminal) kept.push_back(e);
        }
        CHECK(back[i].events == kept);
        CHECK(back[i].date_of_birth == full[i].date_of_birth);
    }
    CHECK(log.find("\tMedicationEnd\tTemozolomid\t") != std::string::npos);

    std::istringstream bad(std::string(kEventLogHeader) + "\nx\tmale\n");
    CHECK_THROWS_AS(read_event_log(bad), DataError);

    std::ostringstream fhir;
    FhirLiteWriter writer(fhir);
    for (const auto& p : full) writer(p);
    std::istringstream lines(fhir.str());
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j["resourceType"] == "Bundle");
        CHECK(j["entry"][0]["resource"]["resourceType"] == "Patient");
        ++count;
    }
    CHECK(count == full.size());
}
