#include <fmt/core.h>

#include "json.hpp"

#include "oncosynth/evaluator.hpp"

namespace oncosynth {

namespace {

using nlohmann::ordered_json;

ordered_json box_json(const BoxStats& b) {
    return {{"n", b.n},         {"median", b.median},           {"q1", b.q1},
            {"q3", b.q3},       {"lower_fence", b.lower_fence}, {"upper_fence", b.upper_fence},
            {"outlier_fraction", b.outlier_fraction},           {"mean", b.mean},
            {"std", b.std}};
}

ordered_json stats_json(const CohortStats& s) {
    ordered_json out{{"cases", s.cases}, {"diagnosed", s.diagnosed}};
    ordered_json localizations = ordered_json::object();
    for (const auto& [icd10, f] : s.frequencies) {
        ordered_json loc{{"frequency", f}};
        const auto& age = s.ages.at(icd10);
        loc["age"] = box_json(age.box);
        auto bins = ordered_json::array();
        for (const auto& [edge, n] : age.hist.bins) bins.push_back({edge, n});
        loc["age_histogram"] = {{"bin_width", age.hist.bin_width}, {"bins", bins}};
        const auto& surv = s.survival.at(icd10);
        loc["survival"] = {{"deaths", surv.deaths}, {"censored", surv.censored}};
        if (surv.box) loc["survival"]["box"] = box_json(*surv.box);
        if (auto m = surv.km.median()) {
            loc["survival"]["km_median"] = *m;
        } else {
            loc["survival"]["km_median"] = nullptr;
        }
        auto km = ordered_json::array();
        for (const auto& p : surv.km.points) km.push_back({p.time, p.survival, p.at_risk});
        loc["survival"]["km"] = km;
        loc["pathways"] = s.pathways.at(icd10);
        localizations[icd10] = std::move(loc);
    }
    out["localizations"] = std::move(localizations);
    return out;
}

ordered_json report_json(const FidelityReport& r) {
    ordered_json out{{"flag_threshold_pp", r.flag_threshold_pp}};
    auto freq = ordered_json::array();
    for (const auto& f : r.frequencies) {
        freq.push_back({{"icd10", f.icd10},
                        {"source", f.source},
                        {"synthetic", f.synthetic},
                        {"difference_pp", f.difference_pp},
                        {"flagged", f.flagged}});
    }
    out["frequencies"] = std::move(freq);
    auto paths = ordered_json::array();
    for (const auto& p : r.pathways) {
        paths.push_back({{"icd10", p.icd10},
                         {"ops", p.ops},
                         {"source", p.source},
                         {"synthetic", p.synthetic},
                         {"difference_pp", p.difference_pp}});
    }
    out["pathways"] = std::move(paths);
    out["discrepancies"] = r.discrepancies;
    out["source"] = stats_json(r.source);
    out["synthetic"] = stats_json(r.synthetic);
    if (!r.strata.empty()) {
        ordered_json strata = ordered_json::object();
        for (const auto& [name, sub] : r.strata) strata[name] = report_json(sub);
        out["strata"] = std::move(strata);
    }
    return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.1f}", *v) : "-"; }

void append_text(std::string& out, const FidelityReport& r, const std::string& title) {
    out += fmt::format("== {} ==\n", title);
    out += fmt::format("cases: source {} ({} diagnosed), synthetic {} ({} diagnosed)\n\n", r.source.cases,
                       r.source.diagnosed, r.synthetic.cases, r.synthetic.diagnosed);
    out += "tumor frequencies\n";
    out += fmt::format("  {:<8} {:>9} {:>9} {:>8}\n", "icd10", "source", "synthetic", "diff_pp");
    for (const auto& f : r.frequencies) {
        out += fmt::format("  {:<8} {:>9.4f} {:>9.4f} {:>+8.2f}{}\n", f.icd10, f.source, f.synthetic,
                           f.difference_pp, f.flagged ? "  FLAG" : "");
    }
    out += "\nage at diagnosis (years): median [q1, q3]\n";
    for (const auto& f : r.frequencies) {
        auto side = [&](const CohortStats& s) {
            const auto it = s.ages.find(f.icd10);
            if (it == s.ages.end()) return std::string("-");
            const auto& b = it->second.box;
            return fmt::format("{:.1f} [{:.1f}, {:.1f}]", b.median, b.q1, b.q3);
        };
        out += fmt::format("  {:<8} source {:<22} synthetic {}\n", f.icd10, side(r.source), side(r.synthetic));
    }
    out += "\nsurvival after diagnosis (days): deaths, median of deceased, KM median\n";
    for (const auto& f : r.frequencies) {
        auto side = [&](const CohortStats& s) {
            const auto it = s.survival.find(f.icd10);
            if (it == s.survival.end()) return std::string("-");
            const auto& v = it->second;
            return fmt::format("{} / {} / {}", v.deaths, fmt_opt(v.box ? std::optional(v.box->median) : std::nullopt),
                               fmt_opt(v.km.median()));
        };
        out += fmt::format("  {:<8} source {:<24} synthetic {}\n", f.icd10, side(r.source), side(r.synthetic));
    }
    out += "\nfirst surgery per localization\n";
    for (const auto& p : r.pathways) {
        out += fmt::format("  {:<8} {:<12} {:>7.4f} {:>7.4f} {:>+8.2f}\n", p.icd10, p.ops, p.source, p.synthetic,
                           p.difference_pp);
    }
    if (!r.discrepancies.empty()) {
        out += "\ndiscrepancies\n";
        for (const auto& d : r.discrepancies) out += "  " + d + "\n";
    }
    for (const auto& [name, sub] : r.strata) {
        out += "\n";
        append_text(out, sub, title + " / " + name);
    }
}

}  // namespace

std::string report_to_json(const FidelityReport& report) { return report_json(report).dump(2) + "\n"; }

std::string report_to_text(const FidelityReport& report) {
    std::string out;
    append_text(out, report, "fidelity report");
    return out;
}

std::map<std::string, std::string> plot_tables(const FidelityReport& r) {
    std::map<std::string, std::string> out;
    std::string& freq = out["frequencies.tsv"];
    freq = "icd10\tsource\tsynthetic\tdifference_pp\tflagged\n";
    for (const auto& f : r.frequencies) {
        freq += fmt::format("{}\t{}\t{}\t{}\t{}\n", f.icd10, f.source, f.synthetic, f.difference_pp, f.flagged ? 1 : 0);
    }
    std::string& paths = out["pathways.tsv"];
    paths = "icd10\tops\tsource\tsynthetic\tdifference_pp\n";
    for (const auto& p : r.pathways) {
        paths += fmt::format("{}\t{}\t{}\t{}\t{}\n", p.icd10, p.ops, p.source, p.synthetic, p.difference_pp);
    }

    const std::string box_header = "cohort\ticd10\tn\tq1\tmedian\tq3\tlower_fence\tupper_fence\toutlier_fraction\n";
    auto box_row = [](std::string_view cohort, const std::string& icd10, const BoxStats& b) {
        return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", cohort, icd10, b.n, b.q1, b.median, b.q3,
                           b.lower_fence, b.upper_fence, b.outlier_fraction);
    };
    std::string& age_box = out["age_box.tsv"];
    std::string& age_hist = out["age_hist.tsv"];
    std::string& surv_box = out["survival_box.tsv"];
    std::string& km = out["survival_km.tsv"];
    age_box = box_header;
    surv_box = box_header;
    age_hist = "cohort\ticd10\tbin_start\tbin_end\tcount\n";
    km = "cohort\ticd10\ttime\tsurvival\tat_risk\n";
    for (const auto& [name, stats] : {std::pair<std::string_view, const CohortStats*>{"source", &r.source},
                                      std::pair<std::string_view, const CohortStats*>{"synthetic", &r.synthetic}}) {
        for (const auto& [icd10, a] : stats->ages) {
            age_box += box_row(name, icd10, a.box);
            for (const auto& [edge, n] : a.hist.bins) {
                age_hist += fmt::format("{}\t{}\t{}\t{}\t{}\n", name, icd10, edge, edge + a.hist.bin_width, n);
            }
        }
        for (const auto& [icd10, s] : stats->survival) {
            if (s.box) surv_box += box_row(name, icd10, *s.box);
            for (const auto& p : s.km.points) {
                km += fmt::format("{}\t{}\t{}\t{}\t{}\n", name, icd10, p.time, p.survival, p.at_risk);
            }
        }
    }
    return out;
}

}  // namespace oncosynth
