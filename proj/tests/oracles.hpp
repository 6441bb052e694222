#pragma once

// Independent reference implementations used only by tests. Each oracle
// computes its answer from first principles (exhaustive enumeration, direct
// evaluation of a definition, generic optimization), deliberately sharing no
// code with the library implementations it checks.

#include "hive/distance.hpp"
#include "hive/ocsvm.hpp"
#include "hive/rba.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace oracle {

// Every interval [i, j] that satisfies the swarm-run definition verbatim:
// all samples strictly above the threshold, a real sub-threshold sample on
// both sides, and length within [min, max]. Checked for all O(n^2) intervals.
std::vector<hive::RbaDetection> rba_by_definition(std::span<const double> series,
                                                  const hive::RbaConfig& config);

// Local Outlier Factor of each query point by direct evaluation of the
// k-distance / reachability-distance / lrd definitions with full O(n^2)
// distance matrices (metric formulas written out locally, not shared with
// the library). `self_excluded` reproduces fit-time scoring where a
// reference point is not its own neighbor.
std::vector<double> lof_brute(const std::vector<std::vector<double>>& reference,
                              const std::vector<std::vector<double>>& queries,
                              std::size_t k, bool self_excluded,
                              hive::Metric metric = hive::Metric::euclidean);

// Area under the ROC curve for scores where higher means more anomalous;
// trapezoidal over all threshold positions, ties handled by the standard
// half-credit convention.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// The one-class SVM dual
//   min 1/2 a' Q a  s.t.  0 <= a_i <= 1/(nu n),  sum a = 1
// solved as a dense QP by accelerated projected gradient descent with an
// exact bisection projection onto the box-bounded simplex. Kernel values are
// evaluated from their formulas locally. Run enough iterations and the
// objective is optimal to roughly the squared iteration count.
struct OneClassQp {
    std::vector<double> alpha;
    double objective;
};
OneClassQp one_class_qp(const std::vector<std::vector<double>>& points,
                        const hive::KernelSpec& kernel, double nu,
                        std::size_t iterations);

} // namespace oracle
