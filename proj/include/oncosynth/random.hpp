#pragma once

#include <cstdint>
#include <random>

namespace oncosynth {

/// Separates independent uses of the same master seed.
enum class StreamDomain : std::uint64_t {
    record_mapping = 1,
    ground_truth = 2,
    simulation = 3,
};

/// Random stream keyed by (seed, index, domain). Two streams with the same
/// key produce the same values regardless of how many other streams were
/// created before, so per-record and per-patient work can run in any order.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t index, StreamDomain domain);

    /// Uniform on [0, 1).
    double uniform01();
    /// Uniform over the closed integer range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal(double mean, double stddev);
    double exponential(double mean);
    double lognormal(double log_mean, double log_stddev);
    bool bernoulli(double p);

private:
    std::mt19937_64 engine_;
};

}  // namespace oncosynth
