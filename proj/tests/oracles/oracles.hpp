#pragma once

// Slow, independent reference implementations used only by the tests. None of
// this code calls into the library beyond its plain data types.

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "oncosynth/module.hpp"
#include "oncosynth/obds.hpp"
#include "oncosynth/timeline.hpp"

namespace oracle {

/// Quadratic k-anonymity grouping. `attributes` is any subset of "gender",
/// "icd10_localization", "deceased_flag" in key order.
std::map<std::vector<std::string>, std::size_t> group_counts(
    const oncosynth::Dataset& dataset, const std::vector<std::string>& attributes,
    const std::set<std::string>& excluded);

/// (gender, from-pathway label, to label)
using TransitionKey = std::tuple<std::string, std::string, std::string>;
struct TransitionValue {
    std::size_t count = 0;
    double probability = 0.0;
};

/// Pairwise scan: for every consecutive pair the pathway prefix is rebuilt
/// from scratch, O(n * m^2).
std::map<TransitionKey, TransitionValue> brute_transitions(
    const std::vector<oncosynth::CaseTimeline>& timelines);

struct Box {
    double median = 0, q1 = 0, q3 = 0, lower_fence = 0, upper_fence = 0, outlier_fraction = 0;
    std::size_t n = 0;
};

/// Sort, then read order statistics by linear interpolation between
/// closest ranks.
Box box_stats(std::vector<double> values);

struct KmPoint {
    double time = 0;
    double survival = 1;
    std::size_t at_risk = 0;
};

/// Product-limit estimate from (time, died) observations; first point is
/// (0, 1, n), then one point per distinct death time.
std::vector<KmPoint> product_limit(const std::vector<std::pair<double, bool>>& observations);

struct DepthExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every state-name sequence from Initial to a Death or Terminal state,
/// following all transition branches. Throws DepthExceeded when a path grows
/// longer than `max_depth` states (which signals a cycle).
std::set<std::vector<std::string>> enumerate_paths(const oncosynth::GmfModule& module, std::size_t max_depth);

}  // namespace oracle
