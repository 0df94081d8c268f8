#include "oncosynth/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "oncosynth/errors.hpp"

namespace oncosynth {

Cohort cohort_from_timelines(std::span<const CaseTimeline> timelines) {
    Cohort out;
    out.reserve(timelines.size());
    for (const auto& tl : timelines) {
        CohortCase c;
        c.gender = tl.gender;
        c.date_of_birth = tl.events.front().date;
        c.icd10 = tl.diagnosis().kind.code;
        c.diagnosis_date = tl.diagnosis().date;
        for (const auto& e : tl.events) {
            if (e.kind.type == EventType::surgery && !c.first_surgery) c.first_surgery = e.kind.code;
            if (e.kind.type == EventType::death) c.death_date = e.date;
        }
        c.last_event_date = tl.events.back().date;
        out.push_back(std::move(c));
    }
    return out;
}

CohortCase case_from_patient(const SyntheticPatient& p) {
    CohortCase c;
    c.gender = p.gender;
    c.date_of_birth = p.date_of_birth;
    c.last_event_date = p.date_of_birth;
    for (const auto& e : p.events) {
        if (e.kind == StateKind::condition_onset && c.icd10.empty()) {
            c.icd10 = e.code;
            c.diagnosis_date = e.date;
        }
        if (e.kind == StateKind::procedure && !c.first_surgery) c.first_surgery = e.code;
        if (e.kind == StateKind::death) c.death_date = e.date;
        c.last_event_date = std::max(c.last_event_date, e.date);
    }
    return c;
}

Cohort cohort_from_event_log(std::istream& in) {
    Cohort out;
    for_each_logged_patient(in, [&](const SyntheticPatient& p) { out.push_back(case_from_patient(p)); });
    return out;
}

namespace {

// Keeps an exact 2.00 pp difference from flagging on rounding noise.
constexpr double kFlagTolerancePp = 1e-9;

double interpolate(const std::vector<double>& sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double age_years(const CohortCase& c) {
    return static_cast<double>(days_between(c.date_of_birth, c.diagnosis_date)) / kDaysPerYear;
}

}  // namespace

BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw EvaluationError("box statistics of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    BoxStats b;
    b.n = v.size();
    b.q1 = interpolate(v, 0.25);
    b.median = interpolate(v, 0.5);
    b.q3 = interpolate(v, 0.75);
    const double iqr = b.q3 - b.q1;
    b.lower_fence = b.q1 - 1.5 * iqr;
    b.upper_fence = b.q3 + 1.5 * iqr;
    const auto outside = std::count_if(v.begin(), v.end(),
                                       [&](double x) { return x < b.lower_fence || x > b.upper_fence; });
    b.outlier_fraction = static_cast<double>(outside) / static_cast<double>(b.n);
    b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(b.n);
    if (b.n > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - b.mean) * (x - b.mean);
        b.std = std::sqrt(ss / static_cast<double>(b.n - 1));
    }
    return b;
}

Histogram histogram(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("histogram bin width must be positive");
    Histogram h;
    h.bin_width = bin_width;
    if (values.empty()) return h;
    std::map<long long, std::size_t> counts;
    for (double x : values) ++counts[static_cast<long long>(std::floor(x / bin_width))];
    for (long long b = counts.begin()->first; b <= counts.rbegin()->first; ++b) {
        const auto it = counts.find(b);
        h.bins.emplace_back(static_cast<double>(b) * bin_width, it == counts.end() ? 0 : it->second);
    }
    return h;
}

std::optional<double> SurvivalCurve::median() const {
    for (const auto& p : points) {
        if (p.survival <= 0.5) return p.time;
    }
    return std::nullopt;
}

SurvivalCurve kaplan_meier(std::span<const Observation> observations) {
    std::vector<Observation> obs(observations.begin(), observations.end());
    std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
        return a.time != b.time ? a.time < b.time : a.died > b.died;
    });
    SurvivalCurve curve;
    curve.points.push_back({0.0, 1.0, obs.size()});
    double s = 1.0;
    std::size_t i = 0;
    while (i < obs.size()) {
        const double t = obs[i].time;
        const std::size_t at_risk = obs.size() - i;
        std::size_t deaths = 0, j = i;
        for (; j < obs.size() && obs[j].time == t; ++j) deaths += obs[j].died;
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            curve.points.push_back({t, s, at_risk});
        }
        i = j;
    }
    return curve;
}

std::map<std::string, double> tumor_frequencies(const Cohort& cohort) {
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& c : cohort) {
        if (c.icd10.empty()) continue;
        ++counts[c.icd10];
        ++total;
    }
    if (total == 0) throw EvaluationError("cohort has no diagnoses");
    std::map<std::string, double> out;
    for (const auto& [icd10, n] : counts) out[icd10] = static_cast<double>(n) / static_cast<double>(total);
    return out;
}

std::map<std::string, AgeStats> age_stats(const Cohort& cohort, double bin_width) {
    std::map<std::string, std::vector<double>> ages;
    for (const auto& c : cohort) {
        if (!c.icd10.empty()) ages[c.icd10].push_back(age_years(c));
    }
    std::map<std::string, AgeStats> out;
    for (const auto& [icd10, v] : ages) out[icd10] = {box_stats(v), histogram(v, bin_width)};
    return out;
}

std::map<std::string, SurvivalStats> survival_stats(const Cohort& cohort) {
    std::map<std::string, std::vector<Observation>> obs;
    for (const auto& c : cohort) {
        if (c.icd10.empty()) continue;
        const Date until = c.death_date.value_or(c.last_event_date);
        obs[c.icd10].push_back({static_cast<double>(days_between(c.diagnosis_date, until)), c.death_date.has_value()});
    }
    std::map<std::string, SurvivalStats> out;
    for (const auto& [icd10, o] : obs) {
        SurvivalStats s;
        std::vector<double> death_times;
        for (const auto& x : o) {
            if (x.died) death_times.push_back(x.time);
        }
        s.deaths = death_times.size();
        s.censored = o.size() - s.deaths;
        if (!death_times.empty()) s.box = box_stats(death_times);
        s.km = kaplan_meier(o);
        out[icd10] = std::move(s);
    }
    return out;
}

std::map<std::string, std::map<std::string, double>> pathway_frequencies(const Cohort& cohort) {
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    std::map<std::string, std::size_t> totals;
    for (const auto& c : cohort) {
        if (c.icd10.empty()) continue;
        ++counts[c.icd10][c.first_surgery.value_or("none")];
        ++totals[c.icd10];
    }
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& [icd10, row] : counts) {
        for (const auto& [ops, n] : row) {
            out[icd10][ops] = static_cast<double>(n) / static_cast<double>(totals.at(icd10));
        }
    }
    return out;
}

CohortStats evaluate(const Cohort& cohort, const EvaluationOptions& options) {
    CohortStats s;
    s.cases = cohort.size();
    s.diagnosed = static_cast<std::size_t>(
        std::count_if(cohort.begin(), cohort.end(), [](const CohortCase& c) { return !c.icd10.empty(); }));
    s.frequencies = tumor_frequencies(cohort);
    s.ages = age_stats(cohort, options.age_bin_width);
    s.survival = survival_stats(cohort);
    s.pathways = pathway_frequencies(cohort);
    return s;
}

FidelityReport compare(const CohortStats& source, const CohortStats& synthetic, const EvaluationOptions& options) {
    FidelityReport r;
    r.source = source;
    r.synthetic = synthetic;
    r.flag_threshold_pp = options.flag_threshold_pp;

    std::set<std::string> localizations;
    for (const auto& [icd10, f] : source.frequencies) localizations.insert(icd10);
    for (const auto& [icd10, f] : synthetic.frequencies) localizations.insert(icd10);
    for (const auto& icd10 : localizations) {
        const bool in_source = source.frequencies.contains(icd10);
        const bool in_synthetic = synthetic.frequencies.contains(icd10);
        if (!in_source || !in_synthetic) {
            r.discrepancies.push_back(fmt::format("{} occurs only in the {} cohort", icd10,
                                                  in_source ? "source" : "synthetic"));
        }
        FrequencyRow row;
        row.icd10 = icd10;
        row.source = in_source ? source.frequencies.at(icd10) : 0.0;
        row.synthetic = in_synthetic ? synthetic.frequencies.at(icd10) : 0.0;
        row.difference_pp = 100.0 * (row.synthetic - row.source);
        row.flagged = std::abs(row.difference_pp) > options.flag_threshold_pp + kFlagTolerancePp;
        r.frequencies.push_back(row);

        if (!in_source || !in_synthetic) continue;
        std::set<std::string> codes;
        const auto& sp = source.pathways.at(icd10);
        const auto& yp = synthetic.pathways.at(icd10);
        for (const auto& [ops, f] : sp) codes.insert(ops);
        for (const auto& [ops, f] : yp) codes.insert(ops);
        for (const auto& ops : codes) {
            PathwayRow p;
            p.icd10 = icd10;
            p.ops = ops;
            p.source = sp.contains(ops) ? sp.at(ops) : 0.0;
            p.synthetic = yp.contains(ops) ? yp.at(ops) : 0.0;
            p.difference_pp = 100.0 * (p.synthetic - p.source);
            r.pathways.push_back(p);
        }
        const bool source_deaths = source.survival.at(icd10).deaths > 0;
        const bool synthetic_deaths = synthetic.survival.at(icd10).deaths > 0;
        if (source_deaths != synthetic_deaths) {
            r.discrepancies.push_back(fmt::format("{} has deaths only in the {} cohort", icd10,
                                                  source_deaths ? "source" : "synthetic"));
        }
    }
    return r;
}

FidelityReport fidelity_report(const Cohort& source, const Cohort& synthetic, const EvaluationOptions& options) {
    FidelityReport r = compare(evaluate(source, options), evaluate(synthetic, options), options);
    if (options.stratify_by_gender) {
        EvaluationOptions inner = options;
        inner.stratify_by_gender = false;
        for (Gender g : {Gender::male, Gender::female}) {
            Cohort a, b;
            std::copy_if(source.begin(), source.end(), std::back_inserter(a),
                         [g](const CohortCase& c) { return c.gender == g; });
            std::copy_if(synthetic.begin(), synthetic.end(), std::back_inserter(b),
                         [g](const CohortCase& c) { return c.gender == g; });
            try {
                r.strata.emplace(std::string(to_string(g)), fidelity_report(a, b, inner));
            } catch (const EvaluationError& e) {
                r.discrepancies.push_back(fmt::format("no {} stratum: {}", to_string(g), e.what()));
            }
        }
    }
    return r;
}

}  // namespace oncosynth
