#include "oncosynth/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <yaml-cpp/yaml.h>

#include "json.hpp"

#include "oncosynth/digest.hpp"
#include "oncosynth/errors.hpp"

namespace oncosynth {

namespace {

constexpr std::string_view kStageNames[] = {"ground-truth", "map",     "filter", "audit",    "timelines",
                                            "extract",      "emit",    "validate", "simulate", "evaluate"};

// Key path of the node being read, for error messages.
class Cursor {
public:
    Cursor(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

    const YAML::Node& node() const { return node_; }
    const std::string& path() const { return path_; }

    /// Required key; use has() first for optional ones.
    Cursor child(const std::string& key) const {
        const std::string path = path_.empty() ? key : path_ + "." + key;
        if (!node_.IsMap()) fail("expected a mapping");
        if (!node_[key].IsDefined()) throw ConfigError(fmt::format("config key '{}': missing", path));
        return {node_[key], path};
    }
    Cursor item(std::size_t i) const { return {node_[i], fmt::format("{}[{}]", path_, i)}; }
    bool has(const std::string& key) const { return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(fmt::format("config key '{}': {}", path_, what));
    }

    void require_map(std::initializer_list<std::string_view> allowed) const {
        if (!node_.IsMap()) fail("expected a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError(fmt::format("config key '{}': unknown key", path_.empty() ? key : path_ + "." + key));
            }
        }
    }

    void require_sequence(std::size_t expected = 0) const {
        if (!node_.IsSequence()) fail("expected a list");
        if (expected != 0 && node_.size() != expected) fail(fmt::format("expected {} items", expected));
    }

    template <class T>
    T as() const {
        if (!node_.IsScalar()) fail("expected a scalar");
        try {
            return node_.as<T>();
        } catch (const YAML::Exception&) {
            fail("cannot read value '" + node_.Scalar() + "'");
        }
    }

    std::vector<std::string> strings() const {
        require_sequence();
        std::vector<std::string> out;
        for (std::size_t i = 0; i < node_.size(); ++i) out.push_back(item(i).as<std::string>());
        return out;
    }

    Date date() const {
        try {
            return parse_iso_date(as<std::string>());
        } catch (const DataError& e) {
            fail(e.what());
        }
    }

    std::pair<int, int> int_pair() const {
        require_sequence(2);
        return {item(0).as<int>(), item(1).as<int>()};
    }

private:
    YAML::Node node_;
    std::string path_;
};

template <class T>
void read_if(const Cursor& c, const std::string& key, T& target) {
    if (c.has(key)) target = c.child(key).as<T>();
}

Gender gender_key(const Cursor& c, const std::string& key) {
    try {
        return parse_gender(key);
    } catch (const DataError&) {
        c.fail("expected 'male' or 'female', found '" + key + "'");
    }
}

void read_privacy(const Cursor& c, PrivacyPolicy& p) {
    c.require_map({"k", "quasi_identifiers", "excluded_localizations"});
    read_if(c, "k", p.k);
    if (c.has("quasi_identifiers")) {
        p.quasi_identifiers.clear();
        for (const auto& name : c.child("quasi_identifiers").strings()) {
            p.quasi_identifiers.push_back(parse_quasi_identifier(name));
        }
    }
    if (c.has("excluded_localizations")) {
        const auto codes = c.child("excluded_localizations").strings();
        p.excluded_localizations = {codes.begin(), codes.end()};
    } else if (c.node()["excluded_localizations"].IsDefined()) {  // present but null
        p.excluded_localizations.clear();
    }
}

void read_simulation(const Cursor& c, PipelineConfig& config) {
    c.require_map({"population_size", "seed", "gender_split", "birth_window", "workers", "batch_size", "max_steps",
                   "fhir", "include_plumbing"});
    SimulationConfig& s = config.simulation;
    read_if(c, "population_size", s.population_size);
    if (c.has("seed")) config.simulation_seed = c.child("seed").as<std::uint64_t>();
    read_if(c, "gender_split", s.gender_split);
    if (c.has("birth_window")) {
        const Cursor w = c.child("birth_window");
        w.require_sequence(2);
        s.birth_window_start = w.item(0).date();
        s.birth_window_end = w.item(1).date();
    }
    read_if(c, "workers", s.workers);
    read_if(c, "batch_size", s.batch_size);
    read_if(c, "max_steps", s.max_steps);
    read_if(c, "fhir", config.write_fhir);
    read_if(c, "include_plumbing", config.include_plumbing);
}

void read_evaluation(const Cursor& c, EvaluationOptions& e) {
    c.require_map({"age_bin_width", "flag_threshold_pp", "stratify_by_gender"});
    read_if(c, "age_bin_width", e.age_bin_width);
    read_if(c, "flag_threshold_pp", e.flag_threshold_pp);
    read_if(c, "stratify_by_gender", e.stratify_by_gender);
}

TherapyType therapy_type(const Cursor& c) {
    const auto name = c.as<std::string>();
    if (name == "surgery") return TherapyType::surgery;
    if (name == "systemic") return TherapyType::systemic;
    if (name == "radiotherapy") return TherapyType::radiotherapy;
    c.fail("expected surgery, systemic or radiotherapy");
}

GroundTruthSpec read_ground_truth(const Cursor& c, PipelineConfig& config) {
    c.require_map({"cohort_size", "seed", "male_fraction", "diagnosis_years", "localizations", "age",
                   "survival_mean_days", "therapies", "menu"});
    GroundTruthSpec g;
    read_if(c, "cohort_size", g.cohort_size);
    if (c.has("seed")) config.ground_truth_seed = c.child("seed").as<std::uint64_t>();
    read_if(c, "male_fraction", g.male_fraction);
    if (c.has("diagnosis_years")) {
        std::tie(g.diagnosis_year_min, g.diagnosis_year_max) = c.child("diagnosis_years").int_pair();
    }

    const Cursor loc = c.child("localizations");
    if (!loc.node().IsMap()) loc.fail("expected a mapping of gender (or 'both') to code probabilities");
    for (const auto& kv : loc.node()) {
        const auto key = kv.first.as<std::string>();
        const Cursor per = loc.child(key);
        if (!per.node().IsMap()) per.fail("expected a mapping of code to probability");
        std::map<std::string, double> probs;
        for (const auto& p : per.node()) {
            const auto code = p.first.as<std::string>();
            probs[code] = per.child(code).as<double>();
        }
        if (key == "both") {
            g.localization_probabilities[Gender::male] = probs;
            g.localization_probabilities[Gender::female] = probs;
        } else {
            g.localization_probabilities[gender_key(per, key)] = probs;
        }
    }

    const Cursor age = c.child("age");
    if (!age.node().IsMap()) age.fail("expected a mapping of gender to {mean, std, shape}");
    for (const auto& kv : age.node()) {
        const auto key = kv.first.as<std::string>();
        const Cursor a = age.child(key);
        a.require_map({"mean", "std", "shape"});
        AgeDistributionSpec spec;
        spec.mean_years = a.child("mean").as<double>();
        spec.std_years = a.child("std").as<double>();
        if (a.has("shape")) {
            const auto shape = parse_age_shape(a.child("shape").as<std::string>());
            if (!shape) a.child("shape").fail("expected normal, lognormal or lognormal_left");
            spec.shape = *shape;
        }
        if (key == "both") {
            g.age[Gender::male] = spec;
            g.age[Gender::female] = spec;
        } else {
            g.age[gender_key(a, key)] = spec;
        }
    }

    const Cursor surv = c.child("survival_mean_days");
    if (surv.node().IsScalar()) {
        g.default_survival_mean_days = surv.as<double>();
    } else if (surv.node().IsMap()) {
        for (const auto& kv : surv.node()) {
            const auto key = kv.first.as<std::string>();
            if (key == "default") {
                g.default_survival_mean_days = surv.child(key).as<double>();
            } else {
                g.survival_mean_days[key] = surv.child(key).as<double>();
            }
        }
    } else {
        surv.fail("expected a number or a mapping of code to mean days");
    }

    if (c.has("therapies")) {
        const Cursor list = c.child("therapies");
        list.require_sequence();
        for (std::size_t i = 0; i < list.node().size(); ++i) {
            const Cursor t = list.item(i);
            t.require_map({"id", "type", "ops", "substances", "duration"});
            TherapyItem item;
            item.id = t.child("id").as<std::string>();
            item.type = therapy_type(t.child("type"));
            read_if(t, "ops", item.ops);
            if (t.has("substances")) {
                const auto subs = t.child("substances").strings();
                item.substances = {subs.begin(), subs.end()};
            }
            if (t.has("duration")) {
                std::tie(item.duration_min_days, item.duration_max_days) = t.child("duration").int_pair();
            }
            g.therapy_items.push_back(std::move(item));
        }
    }

    const Cursor menu = c.child("menu");
    if (!menu.node().IsMap()) menu.fail("expected a mapping of state to transition lists");
    for (const auto& kv : menu.node()) {
        const auto from = kv.first.as<std::string>();
        const Cursor list = menu.child(from);
        list.require_sequence();
        auto& out = g.menu[from];
        for (std::size_t i = 0; i < list.node().size(); ++i) {
            const Cursor t = list.item(i);
            t.require_map({"to", "p", "delay"});
            MenuTransition m;
            m.target = t.child("to").as<std::string>();
            m.probability = t.child("p").as<double>();
            if (t.has("delay")) std::tie(m.delay_min_days, m.delay_max_days) = t.child("delay").int_pair();
            out.push_back(std::move(m));
        }
    }
    return g;
}

std::string therapy_type_name(TherapyType t) {
    switch (t) {
        case TherapyType::surgery: return "surgery";
        case TherapyType::systemic: return "systemic";
        case TherapyType::radiotherapy: return "radiotherapy";
    }
    return "?";
}

}  // namespace

std::string_view stage_name(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage parse_stage(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kStageNames); ++i) {
        if (kStageNames[i] == name) return static_cast<Stage>(i);
    }
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages = [] {
        std::vector<Stage> s;
        for (std::size_t i = 0; i < std::size(kStageNames); ++i) s.push_back(static_cast<Stage>(i));
        return s;
    }();
    return stages;
}

std::vector<Stage> PipelineConfig::effective_stages() const {
    if (!stages.empty()) {
        std::vector<Stage> sorted = stages;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        return sorted;
    }
    std::vector<Stage> out = all_stages();
    if (!ground_truth) {
        out.erase(out.begin());
        const bool xml = input.size() >= 4 && input.substr(input.size() - 4) == ".xml";
        if (xml) out.erase(out.begin());
    }
    return out;
}

SimulationConfig PipelineConfig::simulation_config() const {
    SimulationConfig s = simulation;
    s.seed = simulation_seed.value_or(seed);
    return s;
}

GroundTruthSpec PipelineConfig::ground_truth_spec() const {
    if (!ground_truth) throw ConfigError("no ground_truth section in the configuration");
    GroundTruthSpec g = *ground_truth;
    g.seed = ground_truth_seed.value_or(seed);
    return g;
}

PipelineConfig parse_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    PipelineConfig config;
    if (root.IsNull()) return config;
    const Cursor c(root, "");
    c.require_map({"seed", "stages", "input", "output_dir", "privacy", "extraction", "emission", "simulation",
                   "evaluation", "ground_truth"});
    read_if(c, "seed", config.seed);
    if (c.has("stages")) {
        for (const auto& name : c.child("stages").strings()) config.stages.push_back(parse_stage(name));
    }
    read_if(c, "input", config.input);
    read_if(c, "output_dir", config.output_dir);
    if (c.has("privacy")) read_privacy(c.child("privacy"), config.privacy);
    if (c.has("extraction")) {
        const Cursor e = c.child("extraction");
        e.require_map({"min_localization_samples"});
        read_if(e, "min_localization_samples", config.extraction.min_localization_samples);
    }
    if (c.has("emission")) {
        const Cursor e = c.child("emission");
        e.require_map({"module_name"});
        read_if(e, "module_name", config.module_name);
    }
    if (c.has("simulation")) read_simulation(c.child("simulation"), config);
    if (c.has("evaluation")) read_evaluation(c.child("evaluation"), config.evaluation);
    if (c.has("ground_truth")) config.ground_truth = read_ground_truth(c.child("ground_truth"), config);

    if (auto issues = config_violations(config); !issues.empty()) {
        std::string msg = "invalid configuration";
        for (const auto& i : issues) msg += "; " + i;
        throw ConfigError(msg);
    }
    return config;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::string> config_violations(const PipelineConfig& config) {
    std::vector<std::string> issues;
    for (auto& i : policy_violations(config.privacy)) issues.push_back("privacy: " + i);
    for (auto& i : simulation_config_violations(config.simulation_config())) issues.push_back("simulation: " + i);
    if (!(config.evaluation.age_bin_width > 0.0)) issues.emplace_back("evaluation: age_bin_width must be positive");
    if (!(config.evaluation.flag_threshold_pp >= 0.0)) {
        issues.emplace_back("evaluation: flag_threshold_pp must be non-negative");
    }
    if (config.module_name.empty()) issues.emplace_back("emission: module_name must not be empty");
    if (config.ground_truth) {
        for (auto& i : ground_truth_violations(config.ground_truth_spec())) issues.push_back("ground_truth: " + i);
    }
    return issues;
}

std::string config_to_json(const PipelineConfig& config) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["seed"] = config.seed;
    j["input"] = config.input;

    auto qis = ordered_json::array();
    for (auto qi : config.privacy.quasi_identifiers) qis.push_back(std::string(to_string(qi)));
    j["privacy"] = {{"k", config.privacy.k},
                    {"quasi_identifiers", qis},
                    {"excluded_localizations", config.privacy.excluded_localizations}};
    j["extraction"] = {{"min_localization_samples", config.extraction.min_localization_samples}};
    j["emission"] = {{"module_name", config.module_name}};
    const SimulationConfig sim = config.simulation_config();
    j["simulation"] = {{"population_size", sim.population_size},
                       {"seed", sim.seed},
                       {"gender_split", sim.gender_split},
                       {"birth_window", {format_iso_date(sim.birth_window_start), format_iso_date(sim.birth_window_end)}},
                       {"max_steps", sim.max_steps},
                       {"fhir", config.write_fhir},
                       {"include_plumbing", config.include_plumbing}};
    j["evaluation"] = {{"age_bin_width", config.evaluation.age_bin_width},
                       {"flag_threshold_pp", config.evaluation.flag_threshold_pp},
                       {"stratify_by_gender", config.evaluation.stratify_by_gender}};
    if (config.ground_truth) {
        const GroundTruthSpec g = config.ground_truth_spec();
        ordered_json gt{{"cohort_size", g.cohort_size},
                        {"seed", g.seed},
                        {"male_fraction", g.male_fraction},
                        {"diagnosis_years", {g.diagnosis_year_min, g.diagnosis_year_max}}};
        for (const auto& [gender, probs] : g.localization_probabilities) {
            gt["localizations"][std::string(to_string(gender))] = probs;
        }
        for (const auto& [gender, a] : g.age) {
            gt["age"][std::string(to_string(gender))] = {
                {"mean", a.mean_years}, {"std", a.std_years}, {"shape", age_shape_name(a.shape)}};
        }
        gt["survival_mean_days"] = {{"default", g.default_survival_mean_days}, {"by_localization", g.survival_mean_days}};
        auto items = ordered_json::array();
        for (const auto& t : g.therapy_items) {
            items.push_back({{"id", t.id},
                             {"type", therapy_type_name(t.type)},
                             {"ops", t.ops},
                             {"substances", t.substances},
                             {"duration", {t.duration_min_days, t.duration_max_days}}});
        }
        gt["therapies"] = items;
        ordered_json menu = ordered_json::object();
        for (const auto& [from, list] : g.menu) {
            auto& row = menu[from] = ordered_json::array();
            for (const auto& m : list) {
                row.push_back({{"to", m.target}, {"p", m.probability}, {"delay", {m.delay_min_days, m.delay_max_days}}});
            }
        }
        gt["menu"] = menu;
        j["ground_truth"] = gt;
    }
    return j.dump(2) + "\n";
}

std::string config_digest(const PipelineConfig& config) { return sha256_hex(config_to_json(config)); }

}  // namespace oncosynth
