#pragma once

#include "hive/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hive {

// Average unsuccessful-search path length c(m) of a binary search tree over
// m keys: the normalizer of the isolation score. c(m <= 1) = 0, c(2) = 1,
// otherwise 2 H(m-1) - 2 (m-1)/m with the harmonic number approximated by
// ln(.) + Euler-Mascheroni.
double avg_path_length(std::size_t m);

// One random isolation tree stored as a flat node array; node 0 is the root.
struct IsolationTree {
    struct Node {
        int attribute = -1; // -1 marks an external (leaf) node
        double split = 0.0;
        int left = -1, right = -1;
        std::size_t size = 0; // points isolated into this external node
    };
    std::vector<Node> nodes;
};

struct IforestParams {
    std::size_t n_estimators = 100;
    std::size_t max_samples = 0; // 0 = auto = min(256, n)
    double max_features = 1.0;   // fraction of attributes per tree, (0, 1]
    bool bootstrap = false;      // subsample with replacement when true
    // In (0, 1): decision threshold is the (1 - c)-quantile of training
    // scores. 0 keeps the natural boundary 0.5 of the score scale.
    double contamination = 0.0;
    std::uint64_t seed = 0;
};

// Isolation Forest: anomalies are points that random axis-parallel splits
// isolate quickly, scored s(x) = 2^(-E(h(x)) / c(m)).
class ForestModel {
public:
    // Builds n_estimators trees on independent subsamples of size m, each
    // from its own seed stream, recursion capped at ceil(log2(m)). Trees are
    // built in parallel when the global thread knob allows; the forest is
    // identical either way. Throws std::invalid_argument on fewer than 2
    // points or out-of-range parameters.
    static ForestModel fit(const std::vector<std::vector<double>>& points,
                           const IforestParams& params);

    double score(std::span<const double> x) const;
    std::vector<double> score_batch(const std::vector<std::vector<double>>& queries) const;
    Verdict classify(std::span<const double> x) const;

    // Depth-adjusted path length of x in one tree: depth + c(external size).
    double path_length(std::size_t tree, std::span<const double> x) const;

    double threshold() const { return threshold_; }
    std::size_t subsample_size() const { return subsample_; }
    std::size_t height_limit() const { return height_limit_; }
    std::size_t dimensions() const { return dims_; }
    const IforestParams& params() const { return params_; }
    const std::vector<IsolationTree>& trees() const { return trees_; }

    // Rebuild from serialized state without refitting.
    static ForestModel restore(std::vector<IsolationTree> trees, std::size_t subsample,
                               std::size_t dims, const IforestParams& params,
                               double threshold);

private:
    IforestParams params_;
    std::vector<IsolationTree> trees_;
    std::size_t subsample_ = 0;
    std::size_t height_limit_ = 0;
    std::size_t dims_ = 0;
    double threshold_ = 0.5;
};

} // namespace hive
