#include <cmath>

#include "doctest.h"
#include "oncosynth/errors.hpp"
#include "oncosynth/rules.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace oncosynth;
using oncosynth::test::make_timeline;
using oncosynth::test::ten_case_fixture;

namespace {

const Pathway kAfterDx{EventKind::start(), EventKind::diagnosis("C71.2")};

std::map<oracle::TransitionKey, oracle::TransitionValue> flatten(const ExtractionResult& r) {
    std::map<oracle::TransitionKey, oracle::TransitionValue> out;
    for (const auto& [gender, rules] : r.genders) {
        for (const auto& [from, row] : rules.transitions) {
            for (const auto& [to, stat] : row) {
                out[{std::string(to_string(gender)), pathway_label(from), event_label(to)}] = {stat.count,
                                                                                           stat.probability};
            }
        }
    }
    return out;
}

void check_equal_to_oracle(const std::vector<CaseTimeline>& timelines) {
    const auto mine = flatten(extract(timelines));
    const auto brute = oracle::brute_transitions(timelines);
    REQUIRE(mine.size() == brute.size());
    for (auto a = mine.begin(), b = brute.begin(); a != mine.end(); ++a, ++b) {
        CHECK(a->first == b->first);
        CHECK(a->second.count == b->second.count);
        CHECK(std::abs(a->second.probability - b->second.probability) <= 1e-12);
    }
}

}  // namespace

TEST_CASE("extract: 10-case fixture gives 0.5 / 0.4 / 0.1") {
    const auto timelines = ten_case_fixture();
    const ExtractionResult r = extract(timelines);
    const TransitionRow& row = r.genders.at(Gender::male).transitions.at(kAfterDx);
    REQUIRE(row.size() == 3);
    CHECK(row.at(EventKind::surgery("5-015.0")).probability == 0.5);
    CHECK(row.at(EventKind::systemic_start({"Temozolomid"})).probability == 0.4);
    CHECK(row.at(EventKind::end()).probability == 0.1);
    CHECK(row.at(EventKind::surgery("5-015.0")).count == 5);
    check_equal_to_oracle(timelines);

    const DelayModel& surgery_delay = r.genders.at(Gender::male).delays.at({kAfterDx, EventKind::surgery("5-015.0")});
    CHECK(surgery_delay.kind == DelayKind::uniform);
    CHECK(surgery_delay.min == 10);
    CHECK(surgery_delay.max == 14);
    CHECK(extraction_violations(r).empty());
    CHECK_FALSE(r.genders.contains(Gender::female));
}

TEST_CASE("extract: single Diagnosis -> Death path") {
    const std::vector<CaseTimeline> one{make_timeline(Gender::female, 25000, "C71.9", {{EventKind::death(), 90}})};
    const ExtractionResult r = extract(one);
    const Pathway from{EventKind::start(), EventKind::diagnosis("C71.9")};
    CHECK(r.genders.at(Gender::female).transitions.at(from).at(EventKind::death()).probability == 1.0);
    CHECK(r.genders.at(Gender::female).diagnosis_probabilities.at("C71.9") == 1.0);
    CHECK(r.genders.at(Gender::female).age->std == 0.0);
    CHECK(extraction_violations(r).empty());
}

TEST_CASE("fit_gaussian: {60, 65, 70} and degenerate samples") {
    const std::vector<double> ages{60, 65, 70};
    const GaussianFit fit = fit_gaussian(ages);
    CHECK(fit.mean == 65.0);
    CHECK(fit.std == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(fit.sample_count == 3);
    const std::vector<double> same{0.1, 0.1, 0.1};
    CHECK(fit_gaussian(same).std == 0.0);
    CHECK(fit_gaussian(same).mean == 0.1);
}

TEST_CASE("extract: exponential survival fit is the mean offset") {
    std::vector<CaseTimeline> tls;
    for (int off : {100, 200, 300}) tls.push_back(make_timeline(Gender::male, 20000, "C71.2", {{EventKind::death(), off}}));
    const ExtractionResult r = extract(tls);
    const auto survival = r.survival_models(Gender::male);
    REQUIRE(survival.size() == 1);
    CHECK(survival.at(kAfterDx).kind == DelayKind::exponential);
    CHECK(survival.at(kAfterDx).mean == 200.0);
    CHECK(survival.at(kAfterDx).sample_count == 3);
}

TEST_CASE("extract: per-localization age model needs enough samples") {
    std::vector<CaseTimeline> tls;
    for (int i = 0; i < 30; ++i) tls.push_back(make_timeline(Gender::female, 20000 + 50 * i, "C71.1", {}));
    for (int i = 0; i < 29; ++i) tls.push_back(make_timeline(Gender::female, 25000 + 50 * i, "C71.4", {}));
    const GenderRules& g = extract(tls).genders.at(Gender::female);
    CHECK(g.age_by_localization.contains("C71.1"));
    CHECK_FALSE(g.age_by_localization.contains("C71.4"));
    CHECK(&g.age_model_for("C71.4") == &*g.age);
    CHECK(g.age_model_for("C71.1").sample_count == 30);
    CHECK(g.age->sample_count == 59);
    CHECK_THROWS_AS(extract(std::vector<CaseTimeline>{}), DataError);
}

TEST_CASE("extract equals brute-force pairwise scan on randomized fixtures") {
    int fixtures = 0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto build = build_timelines(test::small_vocabulary_dataset(seed, 1 + static_cast<int>(seed * 7 % 50)));
        REQUIRE(build.timelines.size() <= 50);
        check_equal_to_oracle(build.timelines);
        CHECK(extraction_violations(extract(build.timelines)).empty());
        ++fixtures;
    }
    CHECK(fixtures >= 20);
}

TEST_CASE("property: duplicating timelines doubles counts and keeps probabilities and fits") {
    for (std::uint64_t seed = 40; seed < 50; ++seed) {
        auto tls = build_timelines(test::small_vocabulary_dataset(seed, 40)).timelines;
        const ExtractionResult once = extract(tls);
        const auto copy = tls;
        tls.insert(tls.end(), copy.begin(), copy.end());
        const ExtractionResult twice = extract(tls);
        for (const auto& [gender, rules] : once.genders) {
            const GenderRules& r2 = twice.genders.at(gender);
            CHECK(r2.case_count == 2 * rules.case_count);
            CHECK(r2.diagnosis_probabilities == rules.diagnosis_probabilities);
            CHECK(r2.age->mean == doctest::Approx(rules.age->mean).epsilon(1e-12));
            for (const auto& [from, row] : rules.transitions) {
                for (const auto& [to, stat] : row) {
                    CHECK(r2.transitions.at(from).at(to).count == 2 * stat.count);
                    CHECK(r2.transitions.at(from).at(to).probability == stat.probability);
                }
            }
            for (const auto& [key, m] : rules.delays) {
                const DelayModel& m2 = r2.delays.at(key);
                CHECK(m2.min == m.min);
                CHECK(m2.max == m.max);
                CHECK(m2.mean == doctest::Approx(m.mean).epsilon(1e-12));
            }
        }
        // Doubling empties no pathway and creates none.
        CHECK(flatten(once).size() == flatten(twice).size());
    }
}

TEST_CASE("oracle: timelines with no clinical events give only Start -> Diagnosis -> End") {
    std::vector<CaseTimeline> tls{make_timeline(Gender::male, 20000, "C71.2", {}),
                                  make_timeline(Gender::male, 21000, "C71.2", {})};
    const auto brute = oracle::brute_transitions(tls);
    CHECK(brute.size() == 2);
    CHECK(brute.at({"male", "Start > Diagnosis[C71.2]", "End"}).count == 2);
    check_equal_to_oracle(tls);
}

TEST_CASE("rules.json round-trips exactly; text table renders") {
    const auto tls = build_timelines(test::small_vocabulary_dataset(9, 50)).timelines;
    const ExtractionResult r = extract(tls);
    const std::string json = rules_to_json(r);
    const ExtractionResult back = read_rules_json(json);
    CHECK(back == r);
    CHECK(rules_to_json(back) == json);
    CHECK(r.source_digest.size() == 64);
    const std::string text = rules_to_text(r);
    CHECK(text.find("Start > Diagnosis[C71.2] -> ") != std::string::npos);
    CHECK_THROWS_AS(read_rules_json("{}"), DataError);
    CHECK_THROWS_AS(read_rules_json("not json"), DataError);
    CHECK(parse_pathway_label(pathway_label(kAfterDx)) == kAfterDx);
}
