#include <algorithm>

#include "doctest.h"
#include "oncosynth/errors.hpp"
#include "oncosynth/obds.hpp"
#include "test_support.hpp"

using namespace oncosynth;
using oncosynth::test::count_occurrences;
using oncosynth::test::random_dataset;
using oncosynth::test::read_fixture;

TEST_CASE("parse_obds reads a minimal file") {
    const Dataset d = parse_obds(read_fixture("minimal.xml"));
    REQUIRE(d.patients.size() == 1);
    REQUIRE(d.reports.size() == 1);
    CHECK(d.patients[0].patient_id == "P1");
    CHECK(d.patients[0].gender == Gender::female);
    CHECK(d.patients[0].date_of_birth == parse_iso_date("1951-06-12"));
    CHECK(d.reports[0].payload == ReportPayload{Diagnosis{"C71.2"}});
}

TEST_CASE("parse_obds reads a diagnosis, surgery and death course field by field") {
    const Dataset d = parse_obds(read_fixture("single_course.xml"));
    REQUIRE(d.patients.size() == 1);
    REQUIRE(d.reports.size() == 3);
    CHECK(d.patients[0] == PatientMaster{"GB-0042", Gender::male, parse_iso_date("1949-11-30")});
    CHECK(d.reports[0] == ObdsReport{"GB-0042", parse_iso_date("2016-02-01"), Diagnosis{"C71.1"}});
    CHECK(d.reports[1] == ObdsReport{"GB-0042", parse_iso_date("2016-02-15"), Surgery{"5-015.0"}});
    CHECK(d.reports[2] == ObdsReport{"GB-0042", parse_iso_date("2016-09-20"), Death{}});
    CHECK(std::is_sorted(d.reports.begin(), d.reports.end(), report_chronological_less));
}

TEST_CASE("parse_obds rejects reports for unknown patients") {
    try {
        parse_obds(read_fixture("unknown_patient.xml"));
        FAIL("expected ReferentialError");
    } catch (const ReferentialError& e) {
        CHECK(e.patient_id() == "P99");
        CHECK(std::string(e.what()).find("P99") != std::string::npos);
    }
}

TEST_CASE("malformed XML reports line and column") {
    const std::string xml =
        "<?xml version=\"1.0\"?>\n<obds_subset version=\"1\">\n  <patients>\n  </patient>\n";
    try {
        parse_obds(xml);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK(e.column() >= 3);
    }
}

TEST_CASE("schema errors name the offending element") {
    SUBCASE("missing reports section") {
        try {
            parse_obds("<obds_subset version=\"1\"><patients/></obds_subset>");
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.element() == "reports");
        }
    }
    SUBCASE("missing birth date") {
        try {
            parse_obds(
                "<obds_subset version=\"1\"><patients><patient id=\"A\" gender=\"male\"/>"
                "</patients><reports/></obds_subset>");
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.element() == "patient@birth_date");
        }
    }
    SUBCASE("report with two payloads") {
        CHECK_THROWS_AS(
            parse_obds("<obds_subset version=\"1\"><patients><patient id=\"A\" gender=\"male\" "
                       "birth_date=\"1950-01-01\"/></patients><reports><report patient_id=\"A\" "
                       "date=\"2010-01-01\"><death/><death/></report></reports></obds_subset>"),
            SchemaError);
    }
    SUBCASE("invalid calendar date") {
        CHECK_THROWS_AS(
            parse_obds("<obds_subset version=\"1\"><patients><patient id=\"A\" gender=\"male\" "
                       "birth_date=\"1950-02-30\"/></patients><reports/></obds_subset>"),
            SchemaError);
    }
}

TEST_CASE("invariant violations surface as ValidationError") {
    CHECK_THROWS_AS(
        parse_obds("<obds_subset version=\"1\"><patients><patient id=\"A\" gender=\"male\" "
                   "birth_date=\"1950-01-01\"/></patients><reports><report patient_id=\"A\" "
                   "date=\"2010-01-01\"><diagnosis icd10=\"C50.1\"/></report></reports>"
                   "</obds_subset>"),
        ValidationError);
}

TEST_CASE("write_obds on an empty dataset") {
    const std::string xml = write_obds(Dataset{});
    CHECK(count_occurrences(xml, "<patient ") == 0);
    CHECK(parse_obds(xml) == Dataset{});
}

TEST_CASE("write_obds round-trips two patients with five reports") {
    Dataset d;
    d.patients = {{"A", Gender::male, parse_iso_date("1955-05-05")},
                  {"B", Gender::female, parse_iso_date("1961-12-31")}};
    SystemicTherapyStart temo;
    temo.substances = {"Temozolomid", "Lomustin"};
    temo.therapy_id = "S1";
    d.reports = {{"A", parse_iso_date("2014-01-10"), Diagnosis{"C71.3"}},
                 {"B", parse_iso_date("2014-02-11"), Diagnosis{"C71.9"}},
                 {"A", parse_iso_date("2014-01-30"), temo},
                 {"A", parse_iso_date("2014-04-30"), SystemicTherapyEnd{"S1"}},
                 {"B", parse_iso_date("2014-08-01"), Death{}}};
    CHECK(parse_obds(write_obds(d)) == d);
}

TEST_CASE("write_obds rejects duplicate patient ids") {
    Dataset d;
    d.patients = {{"A", Gender::male, parse_iso_date("1955-05-05")},
                  {"A", Gender::female, parse_iso_date("1961-12-31")}};
    try {
        write_obds(d);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.issues().size() == 1);
        CHECK(e.issues()[0].find("duplicate patient id 'A'") != std::string::npos);
    }
}

TEST_CASE("property: round trip, determinism and per-kind element counts") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        CAPTURE(seed);
        const Dataset d = random_dataset(seed);
        const std::string xml = write_obds(d);
        const Dataset back = parse_obds(xml);
        CHECK(back == d);
        CHECK(parse_obds(xml) == back);
        CHECK(write_obds(back) == xml);

        std::size_t diagnoses = 0, surgeries = 0, deaths = 0, sys_start = 0;
        for (const auto& r : back.reports) {
            diagnoses += std::holds_alternative<Diagnosis>(r.payload);
            surgeries += std::holds_alternative<Surgery>(r.payload);
            deaths += std::holds_alternative<Death>(r.payload);
            sys_start += std::holds_alternative<SystemicTherapyStart>(r.payload);
        }
        CHECK(diagnoses == count_occurrences(xml, "<diagnosis "));
        CHECK(surgeries == count_occurrences(xml, "<surgery "));
        CHECK(deaths == count_occurrences(xml, "<death/>"));
        CHECK(sys_start == count_occurrences(xml, "<systemic_therapy_start"));
    }
}

TEST_CASE("date helpers") {
    CHECK(format_iso_date(parse_iso_date("2000-02-29")) == "2000-02-29");
    CHECK_THROWS_AS(parse_iso_date("2001-02-29"), DataError);
    CHECK_THROWS_AS(parse_iso_date("2001-2-28"), DataError);
    CHECK(age_in_years(parse_iso_date("2000-02-29"), parse_iso_date("2001-02-28")) == 0);
    CHECK(age_in_years(parse_iso_date("2000-02-29"), parse_iso_date("2001-03-01")) == 1);
    CHECK(age_in_years(parse_iso_date("1950-06-15"), parse_iso_date("2015-06-15")) == 65);
    CHECK(age_in_years(parse_iso_date("1950-06-15"), parse_iso_date("2015-06-14")) == 64);
}
