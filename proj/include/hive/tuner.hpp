#pragma once

#include "hive/evaluator.hpp"
#include "hive/rng.hpp"
#include "hive/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hive {

// One hyperparameter's sampling rule: real-uniform over [0, x), inclusive
// integer-uniform over [a, b], log-uniform over [a, b), or a uniform pick
// from a finite tag set.
class ParamDistribution {
public:
    static ParamDistribution uniform(double upper);
    static ParamDistribution integers(std::int64_t lo, std::int64_t hi);
    static ParamDistribution log_uniform(double lo, double hi);
    static ParamDistribution categorical(std::vector<std::string> tags);

    std::variant<double, std::int64_t, std::string> draw(Rng& rng) const;

    // True when `value` lies in this distribution's support.
    bool contains(const std::variant<double, std::int64_t, std::string>& value) const;

private:
    enum class Kind { uniform, integers, log_uniform, categorical };
    Kind kind_ = Kind::uniform;
    double lo_ = 0.0, hi_ = 0.0;
    std::int64_t ilo_ = 0, ihi_ = 0;
    std::vector<std::string> tags_;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;

// Sampled hyperparameter assignment, in the space's declaration order.
using ParamAssignment = std::vector<std::pair<std::string, ParamValue>>;

// Renders a value for logs: integers plainly, reals at full precision.
std::string to_string(const ParamValue& value);

struct SearchSpace {
    std::string detector;
    std::vector<std::pair<std::string, ParamDistribution>> params;
};

// The benchmark's published search space for each detector. The rule-based
// detector is not tuned and gets an empty space.
SearchSpace default_search_space(DetectorKind kind);

// Draws every parameter independently, in declaration order.
ParamAssignment sample(const SearchSpace& space, Rng& rng);

struct TrialResult {
    std::size_t index = 0;
    ParamAssignment params;
    ConfusionCounts counts;
    Metrics scores; // objective = swarm F1; has_f1 false means NA
    bool failed = false;
    std::string error;
    double seconds = 0.0;
    std::uint64_t seed = 0; // the seed handed to the trial's fit
};

struct SearchResult {
    std::vector<TrialResult> trials; // one per trial, in index order
    std::size_t best = 0;

    const TrialResult& winner() const { return trials[best]; }
};

// Evaluates one sampled configuration: fit on the training windows, score the
// holdout, return its confusion counts. A thrown exception marks the trial
// failed and the search continues.
using TrialFn = std::function<ConfusionCounts(
    std::size_t index, const ParamAssignment& params, std::uint64_t trial_seed)>;

// Random search maximizing swarm F1 over the holdout. Trial i's parameters
// and fit seed depend only on (seed, i), so any worker count yields the same
// log. NA objectives rank below 0 and failed trials below NA; ties go to the
// lower index.
SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed, const TrialFn& trial);

// Tab-separated trial log: index, parameters, counts, F1, status.
std::string render_trial_log(const SearchResult& result);

} // namespace hive
