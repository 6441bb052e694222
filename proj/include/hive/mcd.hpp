#pragma once

#include "hive/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hive {

struct McdParams {
    bool assume_centered = false;  // location pinned to the origin
    double support_fraction = 0.0; // <= 0: default h = floor((n+p+1)/2)
    // In (0, 1): cutoff is the (1 - c)-quantile of training robust
    // distances. 0 keeps the chi-squared 0.975 cutoff.
    double contamination = 0.0;
    std::uint64_t seed = 0;

    // Search schedule. Subset enumeration is exact when the number of
    // h-subsets stays within exhaustive_limit; otherwise random restarts with
    // concentration steps run, the best `finalists` iterating to convergence.
    std::size_t exhaustive_limit = 200000;
    int restarts = 30;
    int finalists = 5;
    int initial_csteps = 2;
    int max_csteps = 30;
    double det_tol = 1e-7; // relative determinant change declaring convergence
};

// Minimum-covariance-determinant estimator: the h-point subset with the
// smallest covariance determinant yields a robust location and scatter, and
// a one-step reweighting (classical estimate over the points inside the
// 0.975 chi-squared band of the raw fit) recovers most of the efficiency the
// subset trim gives up. Mahalanobis distances under the reweighted estimates
// separate outliers from the bulk.
class McdModel {
public:
    // Throws std::invalid_argument when n <= p + 1 or parameters are out of
    // range, std::runtime_error when every candidate scatter is singular
    // (degenerate data).
    static McdModel fit(const std::vector<std::vector<double>>& points,
                        const McdParams& params);

    // Mahalanobis distance sqrt((x - T)' S^-1 (x - T)) under the corrected
    // estimates.
    double robust_distance(std::span<const double> x) const;
    std::vector<double> distance_batch(const std::vector<std::vector<double>>& queries) const;
    Verdict classify(std::span<const double> x) const; // anomaly <=> distance > cutoff

    // Reweighted estimates: the ones distances and verdicts use.
    const std::vector<double>& location() const { return location_; }
    const std::vector<double>& scatter() const { return scatter_; } // row-major p x p
    // Estimates of the minimizing h-subset itself (consistency-corrected
    // scatter, no reweighting): the quantities the subset search optimizes.
    const std::vector<double>& raw_location() const { return raw_location_; }
    const std::vector<double>& raw_scatter() const { return raw_scatter_; }
    std::size_t dimensions() const { return dims_; }
    std::size_t support_size() const { return h_; }
    const std::vector<bool>& support() const { return support_; }
    double cutoff() const { return cutoff_; }
    // Determinant of the uncorrected h-subset covariance the fit minimized.
    double raw_determinant() const { return raw_det_; }
    // Multiplier aligning the h-subset scatter with the full-population
    // covariance under Gaussian data, so distances are chi-squared-comparable.
    double correction_factor() const { return correction_; }
    // True when n <= 2p: the estimate is legal but thinly supported, and
    // callers are expected to surface this.
    bool dimension_warning() const { return dimension_warning_; }
    const McdParams& params() const { return params_; }

    // Log-determinant sequence of every concentration-step chain run during
    // the fit (empty in exhaustive mode), for convergence diagnostics; each
    // chain must be non-increasing.
    const std::vector<std::vector<double>>& cstep_log_determinants() const {
        return cstep_determinants_;
    }

    static McdModel restore(std::vector<double> location, std::vector<double> scatter,
                            std::size_t dims, double cutoff, const McdParams& params);

private:
    McdParams params_;
    std::vector<double> location_;
    std::vector<double> scatter_;
    std::vector<double> raw_location_;
    std::vector<double> raw_scatter_;
    std::vector<double> scatter_inverse_;
    std::vector<bool> support_;
    std::size_t dims_ = 0;
    std::size_t h_ = 0;
    double cutoff_ = 0.0;
    double raw_det_ = 0.0;
    double correction_ = 1.0;
    bool dimension_warning_ = false;
    std::vector<std::vector<double>> cstep_determinants_;
};

// The consistency multiplier for an h/n coverage fraction at dimension p:
// (h/n) / F_{chi2, p+2}(q) with q the chi-squared p quantile at h/n.
double mcd_consistency_factor(std::size_t p, double coverage);

} // namespace hive
