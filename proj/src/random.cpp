#include "oncosynth/random.hpp"

#include <array>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace oncosynth {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index, StreamDomain domain) {
    const auto tag = static_cast<std::uint64_t>(domain);
    const std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
    };
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t index, StreamDomain domain)
    : engine_(make_engine(seed, index, domain)) {}

double RandomStream::uniform01() {
    return boost::random::uniform_01<double>{}(engine_);
}

std::int64_t RandomStream::uniform_int(std::int64_t lo, std::int64_t hi) {
    return boost::random::uniform_int_distribution<std::int64_t>{lo, hi}(engine_);
}

double RandomStream::normal(double mean, double stddev) {
    if (stddev <= 0.0) {
        return mean;
    }
    return boost::random::normal_distribution<double>{mean, stddev}(engine_);
}

double RandomStream::exponential(double mean) {
    if (mean <= 0.0) {
        return 0.0;
    }
    return boost::random::exponential_distribution<double>{1.0 / mean}(engine_);
}

double RandomStream::lognormal(double log_mean, double log_stddev) {
    // boost's lognormal_distribution is parameterized by the underlying
    // normal's m and s.
    return boost::random::lognormal_distribution<double>{log_mean, log_stddev}(engine_);
}

bool RandomStream::bernoulli(double p) {
    return uniform01() < p;
}

}  // namespace oncosynth
