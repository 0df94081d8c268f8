#include "oncosynth/executor.hpp"

#include <cmath>
#include <thread>
#include <unordered_map>

#include "oncosynth/errors.hpp"
#include "oncosynth/random.hpp"

namespace oncosynth {

std::vector<std::string> simulation_config_violations(const SimulationConfig& config) {
    std::vector<std::string> issues;
    if (config.population_size == 0) issues.emplace_back("population_size must be positive");
    if (!(config.gender_split >= 0.0 && config.gender_split <= 1.0)) {
        issues.emplace_back("gender_split must lie in [0, 1]");
    }
    if (config.birth_window_end < config.birth_window_start) issues.emplace_back("birth window is empty");
    if (config.workers == 0) issues.emplace_back("workers must be at least 1");
    if (config.batch_size == 0) issues.emplace_back("batch_size must be positive");
    if (config.max_steps == 0) issues.emplace_back("max_steps must be positive");
    return issues;
}

bool is_clinical(StateKind kind) {
    switch (kind) {
        case StateKind::condition_onset:
        case StateKind::procedure:
        case StateKind::medication_order:
        case StateKind::medication_end:
        case StateKind::careplan_start:
        case StateKind::careplan_end:
        case StateKind::death: return true;
        default: return false;
    }
}

std::int64_t delay_to_days(double amount, const std::string& unit) {
    double days = unit == "years" ? amount * kDaysPerYear : amount;
    if (!(days > 0.0)) return 0;
    return static_cast<std::int64_t>(std::floor(days + 0.5));
}

namespace {

constexpr int kUnresolved = -1;

struct CompiledState {
    const GmfState* state = nullptr;
    std::vector<int> targets;  // parallel to transition_targets(); kUnresolved when missing
    std::string code;
};

class CompiledModule {
public:
    explicit CompiledModule(const GmfModule& module) : module_(module) {
        std::unordered_map<std::string_view, int> index;
        for (std::size_t i = 0; i < module.states.size(); ++i) {
            index.emplace(module.states[i].name, static_cast<int>(i));
            if (module.states[i].kind == StateKind::initial && initial_ == kUnresolved) {
                initial_ = static_cast<int>(i);
            }
        }
        if (initial_ == kUnresolved) {
            throw SimulationError("module has no Initial state");
        }
        for (const auto& s : module.states) {
            CompiledState c;
            c.state = &s;
            for (const auto& t : transition_targets(s)) {
                const auto it = index.find(t);
                c.targets.push_back(it == index.end() ? kUnresolved : it->second);
            }
            if (!s.codes.empty()) {
                c.code = s.codes.front().code;
            } else if (auto it = index.find(s.ends); it != index.end()) {
                const auto& opener = module.states[static_cast<std::size_t>(it->second)];
                if (!opener.codes.empty()) c.code = opener.codes.front().code;
            }
            states_.push_back(std::move(c));
        }
    }

    SyntheticPatient run(const SimulationConfig& config, std::size_t patient_index) const {
        RandomStream rng(config.seed, patient_index, StreamDomain::simulation);
        SyntheticPatient p;
        p.patient_index = patient_index;
        p.gender = rng.bernoulli(config.gender_split) ? Gender::male : Gender::female;
        const auto window = days_between(config.birth_window_start, config.birth_window_end);
        p.date_of_birth = add_days(config.birth_window_start, rng.uniform_int(0, window));

        Date clock = p.date_of_birth;
        int current = initial_;
        for (std::size_t step = 0;; ++step) {
            if (step >= config.max_steps) {
                throw SimulationError("patient " + std::to_string(patient_index) + " exceeded " +
                                      std::to_string(config.max_steps) + " steps; the module has a cycle");
            }
            const CompiledState& c = states_[static_cast<std::size_t>(current)];
            const GmfState& s = *c.state;
            if (s.delay) {
                clock = add_days(clock, sample_delay(*s.delay, rng));
            }
            p.events.push_back({s.name, s.kind, c.code, clock});
            if (s.kind == StateKind::terminal || s.kind == StateKind::death) {
                return p;
            }
            current = next_state(c, p.gender, rng);
        }
    }

private:
    static std::int64_t sample_delay(const DelaySpec& d, RandomStream& rng) {
        switch (d.type) {
            case DelaySpec::Type::gaussian: return delay_to_days(rng.normal(d.mean, d.std), d.unit);
            case DelaySpec::Type::exponential: return delay_to_days(rng.exponential(d.mean), d.unit);
            case DelaySpec::Type::range:
                return delay_to_days(static_cast<double>(rng.uniform_int(d.low, d.high)), d.unit);
            case DelaySpec::Type::exact: return delay_to_days(d.quantity, d.unit);
        }
        return 0;
    }

    int next_state(const CompiledState& c, Gender gender, RandomStream& rng) const {
        const GmfState& s = *c.state;
        std::size_t choice = 0;
        if (std::holds_alternative<DirectTransition>(s.transition)) {
            choice = 0;
        } else if (const auto* d = std::get_if<DistributedTransition>(&s.transition)) {
            const double u = rng.uniform01();
            double cumulative = 0.0;
            choice = d->branches.size() - 1;
            for (std::size_t i = 0; i < d->branches.size(); ++i) {
                cumulative += d->branches[i].probability;
                if (u < cumulative) {
                    choice = i;
                    break;
                }
            }
        } else if (const auto* cond = std::get_if<ConditionalTransition>(&s.transition)) {
            choice = cond->branches.size();
            for (std::size_t i = 0; i < cond->branches.size(); ++i) {
                if (!cond->branches[i].gender || *cond->branches[i].gender == gender) {
                    choice = i;
                    break;
                }
            }
            if (choice == cond->branches.size()) {
                throw SimulationError("state '" + s.name + "' has no branch for " + std::string(to_string(gender)));
            }
        } else {
            throw SimulationError("state '" + s.name + "' has no transition");
        }
        if (c.targets.empty()) {
            throw SimulationError("state '" + s.name + "' has an empty transition");
        }
        const int target = c.targets[choice];
        if (target == kUnresolved) {
            throw SimulationError("state not found: '" + transition_targets(s)[choice] + "' (from '" + s.name + "')");
        }
        return target;
    }

    const GmfModule& module_;
    std::vector<CompiledState> states_;
    int initial_ = kUnresolved;
};

}  // namespace

SyntheticPatient simulate_patient(const GmfModule& module, const SimulationConfig& config,
                                  std::size_t patient_index) {
    return CompiledModule(module).run(config, patient_index);
}

void simulate(const GmfModule& module, const SimulationConfig& config, const PatientSink& sink) {
    if (auto issues = simulation_config_violations(config); !issues.empty()) {
        throw ConfigError("invalid simulation config: " + issues.front());
    }
    const CompiledModule compiled(module);
    std::vector<SyntheticPatient> batch;
    for (std::size_t first = 0; first < config.population_size; first += config.batch_size) {
        const std::size_t n = std::min(config.batch_size, config.population_size - first);
        batch.assign(n, {});
        const std::size_t workers = std::min<std::size_t>(config.workers, n);
        if (workers <= 1) {
            for (std::size_t i = 0; i < n; ++i) batch[i] = compiled.run(config, first + i);
        } else {
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::thread> threads;
            for (std::size_t w = 0; w < workers; ++w) {
                threads.emplace_back([&, w] {
                    try {
                        for (std::size_t i = w; i < n; i += workers) batch[i] = compiled.run(config, first + i);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }
        for (const auto& p : batch) sink(p);
    }
}

}  // namespace oncosynth
