#include <fmt/core.h>

#include "oncosynth/errors.hpp"
#include "oncosynth/module.hpp"
#include "oncosynth/version.hpp"

namespace oncosynth {

std::string sanitize_identifier(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (!ok) c = '_';
    }
    return out;
}

std::string icd10_display(std::string_view icd10) {
    static const std::map<std::string_view, std::string_view> sites{
        {"C71.0", "Cerebrum, except lobes and ventricles"},
        {"C71.1", "Frontal lobe"},
        {"C71.2", "Temporal lobe"},
        {"C71.3", "Parietal lobe"},
        {"C71.4", "Occipital lobe"},
        {"C71.5", "Cerebral ventricle"},
        {"C71.6", "Cerebellum"},
        {"C71.7", "Brain stem"},
        {"C71.8", "Overlapping lesion of brain"},
        {"C71.9", "Brain, unspecified"},
        {"C72.0", "Spinal cord"},
    };
    if (auto it = sites.find(icd10); it != sites.end()) {
        return "Malignant neoplasm: " + std::string(it->second);
    }
    return "Malignant neoplasm " + std::string(icd10);
}

namespace {

GmfState make_state(std::string name, StateKind kind, Transition transition = {}) {
    GmfState s;
    s.name = std::move(name);
    s.kind = kind;
    s.transition = std::move(transition);
    return s;
}

GmfState make_delay(std::string name, const DelaySpec& spec) {
    GmfState s = make_state(std::move(name), StateKind::delay);
    s.delay = spec;
    return s;
}

std::string_view gender_word(Gender g) {
    return g == Gender::male ? "Male" : "Female";
}

class Emitter {
public:
    explicit Emitter(const ExtractionResult& x) : x_(x) {}

    GmfModule run(const EmitOptions& options) {
        module_.name = options.module_name;
        module_.remarks = {
            fmt::format("Generated by {} from {} case timelines.", x_.generator_version, x_.timeline_count),
            "Transition probabilities and delays are copied from the extracted rules.",
        };
        module_.metadata.generator = std::string(kGeneratorVersion);
        module_.metadata.source_digest = x_.source_digest;
        module_.metadata.seed_independent = true;
        module_.metadata.stamps = options.stamps;

        const std::size_t initial = add(make_state("Initial", StateKind::initial));
        ConditionalTransition split;
        for (Gender g : {Gender::male, Gender::female}) {
            const auto it = x_.genders.find(g);
            split.branches.push_back({g, it == x_.genders.end() ? "Terminal" : emit_gender(g, it->second)});
        }
        split.branches.push_back({std::nullopt, "Terminal"});
        module_.states[initial].transition = split;

        if (uses_death_) {
            add(make_state("Death", StateKind::death, DirectTransition{"Terminal"}));
        }
        add(make_state("Terminal", StateKind::terminal));
        return std::move(module_);
    }

private:
    struct OpenTherapies {
        std::string medication;
        std::string careplan;
    };

    std::size_t add(GmfState state) {
        module_.states.push_back(std::move(state));
        return module_.states.size() - 1;
    }

    std::string fresh_name(std::string_view kind, std::string_view code) {
        const std::string base = fmt::format("{}_{}", kind, sanitize_identifier(code));
        return fmt::format("{}_{}", base, ++ordinals_[base]);
    }

    std::string emit_gender(Gender g, const GenderRules& rules) {
        const std::string split_name = fresh_name("Simple", fmt::format("Localization_{}", gender_word(g)));
        const std::size_t split = add(make_state(split_name, StateKind::simple));
        DistributedTransition choice;
        for (const auto& [icd10, p] : rules.diagnosis_probabilities) {
            const GaussianFit& age = rules.age_model_for(icd10);
            DelaySpec d;
            d.unit = "years";
            if (age.std > 0.0) {
                d.type = DelaySpec::Type::gaussian;
                d.mean = age.mean;
                d.std = age.std;
            } else {
                d.type = DelaySpec::Type::exact;
                d.quantity = age.mean;
            }
            const std::string delay_name = fresh_name("Delay", fmt::format("Age_{}_{}", icd10, gender_word(g)));
            const std::size_t delay = add(make_delay(delay_name, d));
            choice.branches.push_back({p, delay_name});

            const std::string onset_name = fresh_name("ConditionOnset", icd10);
            module_.states[delay].transition = DirectTransition{onset_name};
            const std::size_t onset = add(make_state(onset_name, StateKind::condition_onset));
            module_.states[onset].codes = {{"ICD-10-GM", icd10, icd10_display(icd10)}};
            emit_subtree(rules, Pathway{EventKind::start(), EventKind::diagnosis(icd10)}, onset, {});
        }
        module_.states[split].transition = std::move(choice);
        return split_name;
    }

    void emit_subtree(const GenderRules& rules, const Pathway& path, std::size_t from_state,
                      const OpenTherapies& open) {
        const auto row = rules.transitions.find(path);
        if (row == rules.transitions.end()) {
            throw EmissionError("no outgoing transitions after " + pathway_label(path));
        }
        std::vector<DistributedBranch> branches;
        for (const auto& [to, stat] : row->second) {
            branches.push_back({stat.probability, emit_branch(rules, path, to, open)});
        }
        if (branches.size() == 1 && branches.front().probability == 1.0) {
            module_.states[from_state].transition = DirectTransition{branches.front().target};
        } else {
            module_.states[from_state].transition = DistributedTransition{std::move(branches)};
        }
    }

    // Returns the name of the first state on the branch (its delay, if any).
    std::string emit_branch(const GenderRules& rules, const Pathway& path, const EventKind& to,
                            const OpenTherapies& open) {
        const auto model = rules.delays.find({path, to});
        if (model == rules.delays.end()) {
            throw EmissionError("no delay model for " + pathway_label(path) + " -> " + event_label(to));
        }
        std::optional<std::size_t> delay;
        if (auto spec = delay_spec(model->second)) {
            const std::string_view code = to.type == EventType::death ? "Survival"
                                          : to.type == EventType::end ? "Followup"
                                                                      : "Gap";
            delay = add(make_delay(fresh_name("Delay", code), *spec));
        }

        std::string target;
        if (to.type == EventType::death) {
            uses_death_ = true;
            target = "Death";
        } else if (to.type == EventType::end) {
            target = "Terminal";
        } else {
            target = emit_event_state(rules, path, to, open);
        }
        if (!delay) {
            return target;
        }
        module_.states[*delay].transition = DirectTransition{target};
        return module_.states[*delay].name;
    }

    std::string emit_event_state(const GenderRules& rules, const Pathway& path, const EventKind& to,
                                 OpenTherapies open) {
        GmfState s;
        switch (to.type) {
            case EventType::surgery:
                s.kind = StateKind::procedure;
                s.name = fresh_name("Procedure", to.code);
                s.codes = {{"OPS", to.code, "Surgery " + to.code}};
                break;
            case EventType::systemic_start:
                s.kind = StateKind::medication_order;
                s.name = fresh_name("MedicationOrder", join_substances(to.substances));
                s.codes = {{"substances", join_substances(to.substances), join_substances(to.substances)}};
                open.medication = s.name;
                break;
            case EventType::systemic_end:
                if (open.medication.empty()) {
                    throw EmissionError("systemic therapy end without start after " + pathway_label(path));
                }
                s.kind = StateKind::medication_end;
                s.name = fresh_name("MedicationEnd", join_substances(to.substances));
                s.ends = open.medication;
                break;
            case EventType::radio_start:
                s.kind = StateKind::careplan_start;
                s.name = fresh_name("CarePlanStart", "Radiotherapy");
                s.codes = {{"therapy", "radiotherapy", "Radiotherapy"}};
                open.careplan = s.name;
                break;
            case EventType::radio_end:
                if (open.careplan.empty()) {
                    throw EmissionError("radiotherapy end without start after " + pathway_label(path));
                }
                s.kind = StateKind::careplan_end;
                s.name = fresh_name("CarePlanEnd", "Radiotherapy");
                s.ends = open.careplan;
                break;
            default:
                throw EmissionError("unexpected " + event_label(to) + " after " + pathway_label(path));
        }
        const std::string name = s.name;
        const std::size_t index = add(std::move(s));
        Pathway next = path;
        next.push_back(to);
        emit_subtree(rules, next, index, open);
        return name;
    }

    static std::optional<DelaySpec> delay_spec(const DelayModel& m) {
        DelaySpec d;
        d.unit = "days";
        if (m.degenerate()) {
            const double q = m.kind == DelayKind::exponential ? 0.0 : static_cast<double>(m.min);
            if (q == 0.0) return std::nullopt;
            d.type = DelaySpec::Type::exact;
            d.quantity = q;
        } else if (m.kind == DelayKind::exponential) {
            d.type = DelaySpec::Type::exponential;
            d.mean = m.mean;
        } else {
            d.type = DelaySpec::Type::range;
            d.low = m.min;
            d.high = m.max;
        }
        return d;
    }

    const ExtractionResult& x_;
    GmfModule module_;
    std::map<std::string, int> ordinals_;
    bool uses_death_ = false;
};

}  // namespace

GmfModule emit(const ExtractionResult& extraction, const EmitOptions& options) {
    if (auto issues = extraction_violations(extraction); !issues.empty()) {
        std::string message = "cannot emit module from invalid rules:";
        for (const auto& issue : issues) message += "\n  " + issue;
        throw EmissionError(message);
    }
    return Emitter(extraction).run(options);
}

}  // namespace oncosynth
