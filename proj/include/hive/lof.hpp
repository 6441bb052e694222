#pragma once

#include "hive/distance.hpp"
#include "hive/types.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hive {

// Exact neighbor-search strategies. All three return the same tie-inclusive
// k-neighborhood (every point within the k-distance), so scores are identical;
// the trees only change how much of the reference set gets inspected.
enum class NeighborIndex { exhaustive, kd_tree, ball_tree };

std::string to_string(NeighborIndex idx);
NeighborIndex neighbor_index_from_string(const std::string& s);

struct LofParams {
    std::size_t k = 20;
    Metric metric = Metric::euclidean;
    NeighborIndex index = NeighborIndex::exhaustive;
    std::size_t leaf_size = 30;
    // In (0, 0.5): decision threshold is the (1 - c)-quantile of the
    // reference scores. 0 disables calibration; the threshold is then the
    // natural score boundary 1.
    double contamination = 0.0;
};

// Local Outlier Factor: density-ratio score over a fixed reference set.
// Scores near 1 mean the query is as dense as its neighbors; scores above 1
// mean it is isolated relative to them.
class LofModel {
public:
    // Builds the neighbor index and precomputes each reference point's
    // k-distance, local reachability density, and self-excluded score.
    // Throws std::invalid_argument when fewer than k + 1 distinct points are
    // given or k < 1.
    static LofModel fit(std::vector<std::vector<double>> points, const LofParams& params);

    double score(std::span<const double> query) const;
    // Scores many queries, parallelized over queries when the global thread
    // knob allows; results are identical to scoring serially.
    std::vector<double> score_batch(const std::vector<std::vector<double>>& queries) const;

    Verdict classify(std::span<const double> query) const;

    double threshold() const { return threshold_; }
    const LofParams& params() const { return params_; }
    const std::vector<std::vector<double>>& points() const { return points_; }
    // Fit-time score of each reference point with itself excluded from its
    // own neighborhood (the calibration sample for the threshold).
    const std::vector<double>& reference_scores() const { return ref_scores_; }
    const std::vector<double>& reference_kdistance() const { return kdist_; }
    const std::vector<double>& reference_lrd() const { return lrd_; }

    LofModel(LofModel&&) noexcept;
    LofModel& operator=(LofModel&&) noexcept;
    ~LofModel();

    // Rebuild a model from serialized state (clio checkpoints); recomputes
    // the neighbor index and per-point quantities from the stored points.
    static LofModel restore(std::vector<std::vector<double>> points,
                            const LofParams& params, double threshold);

private:
    LofModel();

    LofParams params_;
    std::vector<std::vector<double>> points_;
    std::vector<double> kdist_;
    std::vector<double> lrd_;
    std::vector<double> ref_scores_;
    double threshold_ = 1.0;

    struct Index; // kd-tree / ball-tree internals
    std::unique_ptr<Index> index_;

    void build(const LofParams& params, bool calibrate_threshold);
    std::vector<std::size_t> neighborhood(std::span<const double> query,
                                          std::size_t exclude) const;
    double lrd_of(std::span<const double> query,
                  const std::vector<std::size_t>& neigh) const;
};

} // namespace hive
