#include "hive/mcd.hpp"

#include "hive/parallel.hpp"
#include "hive/rng.hpp"
#include "hive/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hive {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Location and 1/h covariance of an index subset; location stays at the
// origin when centered.
void estimate(const MatrixXd& x, const std::vector<std::size_t>& subset, bool centered,
              VectorXd& location, MatrixXd& scatter) {
    const auto p = x.cols();
    const auto h = static_cast<double>(subset.size());
    location = VectorXd::Zero(p);
    if (!centered) {
        for (auto i : subset) location += x.row(static_cast<Eigen::Index>(i)).transpose();
        location /= h;
    }
    scatter = MatrixXd::Zero(p, p);
    for (auto i : subset) {
        VectorXd d = x.row(static_cast<Eigen::Index>(i)).transpose() - location;
        scatter.noalias() += d * d.transpose();
    }
    scatter /= h;
}

// Log-determinant through the Cholesky factor; fails on non-SPD scatter.
// A relative floor on the pivots rejects matrices that are singular up to
// round-off (collinear data factors with a tiny positive trailing pivot
// instead of failing outright).
bool log_det_spd(const MatrixXd& s, double& logdet, Eigen::LLT<MatrixXd>& llt) {
    llt.compute(s);
    if (llt.info() != Eigen::Success) return false;
    const double floor = s.diagonal().maxCoeff() * 1e-12;
    logdet = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        double d = llt.matrixLLT()(i, i);
        if (!(d > 0.0) || !std::isfinite(d) || d * d <= floor) return false;
        logdet += 2.0 * std::log(d);
    }
    return std::isfinite(logdet);
}

// Squared Mahalanobis distance of every row under (location, llt-of-scatter).
VectorXd squared_distances(const MatrixXd& x, const VectorXd& location,
                           const Eigen::LLT<MatrixXd>& llt) {
    MatrixXd centered = x.rowwise() - location.transpose();
    MatrixXd z = llt.matrixL().solve(centered.transpose());
    return z.colwise().squaredNorm().transpose();
}

// The h indices of smallest squared distance, ties broken by index.
std::vector<std::size_t> smallest_h(const VectorXd& d2, std::size_t h) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(d2.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          double da = d2(static_cast<Eigen::Index>(a));
                          double db = d2(static_cast<Eigen::Index>(b));
                          return da < db || (da == db && a < b);
                      });
    idx.resize(h);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct Candidate {
    std::vector<std::size_t> subset;
    VectorXd location;
    MatrixXd scatter;
    double logdet = std::numeric_limits<double>::infinity();
    bool valid = false;
    std::vector<double> logdet_history;
};

// One concentration step: re-select the h closest points under the current
// estimate and re-estimate from them. Determinant never increases.
bool c_step(const MatrixXd& x, std::size_t h, bool centered, Candidate& cand) {
    Eigen::LLT<MatrixXd> llt;
    double logdet = 0.0;
    if (!log_det_spd(cand.scatter, logdet, llt)) return false;
    VectorXd d2 = squared_distances(x, cand.location, llt);
    cand.subset = smallest_h(d2, h);
    estimate(x, cand.subset, centered, cand.location, cand.scatter);
    if (!log_det_spd(cand.scatter, cand.logdet, llt)) return false;
    cand.logdet_history.push_back(cand.logdet);
    return true;
}

Candidate run_restart(const MatrixXd& x, std::size_t h, const McdParams& params,
                      std::uint64_t restart_seed) {
    Rng rng(restart_seed);
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());

    Candidate cand;
    // Elemental start: p + 1 random points, widened until the scatter is
    // invertible so a first distance ranking exists.
    cand.subset = rng.sample_without_replacement(n, std::min(n, p + 1));
    std::sort(cand.subset.begin(), cand.subset.end());
    Eigen::LLT<MatrixXd> llt;
    while (true) {
        estimate(x, cand.subset, params.assume_centered, cand.location, cand.scatter);
        double logdet = 0.0;
        if (log_det_spd(cand.scatter, logdet, llt)) {
            cand.logdet = logdet;
            break;
        }
        if (cand.subset.size() == n) return cand; // hopeless: all points degenerate
        std::size_t extra;
        do {
            extra = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        } while (std::binary_search(cand.subset.begin(), cand.subset.end(), extra));
        cand.subset.insert(
            std::upper_bound(cand.subset.begin(), cand.subset.end(), extra), extra);
    }
    // The elemental determinant stays out of the recorded chain: the
    // non-increase guarantee starts with the first h-subset estimate.

    cand.valid = true;
    for (int s = 0; s < params.initial_csteps && cand.valid; ++s)
        cand.valid = c_step(x, h, params.assume_centered, cand);
    return cand;
}

// Number of h-subsets, capped; infinity-like sentinel once past the cap.
double subset_count(std::size_t n, std::size_t h, double cap) {
    double c = 1.0;
    const std::size_t k = std::min(h, n - h);
    for (std::size_t i = 1; i <= k; ++i) {
        c *= static_cast<double>(n - k + i) / static_cast<double>(i);
        if (c > cap) return cap + 1.0;
    }
    return c;
}

} // namespace

double mcd_consistency_factor(std::size_t p, double coverage) {
    if (coverage >= 1.0 - 1e-12) return 1.0;
    const double df = static_cast<double>(p);
    const double q = stats::chi2_quantile(coverage, df);
    return coverage / stats::chi2_cdf(q, df + 2.0);
}

McdModel McdModel::fit(const std::vector<std::vector<double>>& points,
                       const McdParams& params) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("mcd: no points");
    const std::size_t p = points.front().size();
    for (const auto& row : points)
        if (row.size() != p) throw std::invalid_argument("mcd: ragged point set");
    if (n <= p + 1)
        throw std::invalid_argument("mcd: need n > p + 1 (n = " + std::to_string(n) +
                                    ", p = " + std::to_string(p) + ")");
    if (params.contamination < 0.0 || params.contamination >= 1.0)
        throw std::invalid_argument("mcd: contamination must lie in [0, 1)");
    if (params.restarts < 1 || params.finalists < 1)
        throw std::invalid_argument("mcd: restarts and finalists must be >= 1");

    MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];

    // Support size: the default majority subset, or the clamped fraction.
    std::size_t h;
    if (params.support_fraction > 0.0) {
        const double lo = static_cast<double>(n + p + 1) / (2.0 * static_cast<double>(n));
        const double f = std::clamp(params.support_fraction, lo, 1.0);
        h = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
    } else {
        h = (n + p + 1) / 2;
    }
    h = std::clamp<std::size_t>(h, std::min(n, p + 1), n);

    McdModel model;
    model.params_ = params;
    model.dims_ = p;
    model.h_ = h;
    model.dimension_warning_ = n <= 2 * p;

    Candidate best;
    if (h == n) {
        best.subset.resize(n);
        std::iota(best.subset.begin(), best.subset.end(), 0);
        estimate(x, best.subset, params.assume_centered, best.location, best.scatter);
        Eigen::LLT<MatrixXd> llt;
        best.valid = log_det_spd(best.scatter, best.logdet, llt);
    } else if (subset_count(n, h, static_cast<double>(params.exhaustive_limit)) <=
               static_cast<double>(params.exhaustive_limit)) {
        // Exact enumeration: every h-subset, minimum determinant wins; ties
        // go to the lexicographically first subset.
        std::vector<std::size_t> subset(h);
        std::iota(subset.begin(), subset.end(), 0);
        Candidate cand;
        Eigen::LLT<MatrixXd> llt;
        while (true) {
            cand.subset = subset;
            estimate(x, cand.subset, params.assume_centered, cand.location, cand.scatter);
            cand.valid = log_det_spd(cand.scatter, cand.logdet, llt);
            if (cand.valid && cand.logdet < best.logdet) best = cand;

            // Advance to the next combination of h out of n.
            std::size_t i = h;
            while (i > 0 && subset[i - 1] == n - h + i - 1) --i;
            if (i == 0) break;
            ++subset[i - 1];
            for (std::size_t j = i; j < h; ++j) subset[j] = subset[j - 1] + 1;
        }
        if (!(best.logdet < std::numeric_limits<double>::infinity()))
            throw std::runtime_error("mcd: singular scatter on every h-subset");
        best.valid = true;
    } else {
        // Concentration from random elemental starts; short chains for all,
        // full convergence only for the most promising.
        std::vector<Candidate> cands(static_cast<std::size_t>(params.restarts));
        const int threads = par::threads();
        if (threads == 1) {
            for (std::size_t r = 0; r < cands.size(); ++r)
                cands[r] = run_restart(x, h, params, derive_seed(params.seed, "restart", r));
        } else {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
            for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(cands.size()); ++r)
                cands[static_cast<std::size_t>(r)] =
                    run_restart(x, h, params,
                                derive_seed(params.seed, "restart",
                                            static_cast<std::uint64_t>(r)));
        }

        std::vector<std::size_t> rank(cands.size());
        std::iota(rank.begin(), rank.end(), 0);
        std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            if (cands[a].valid != cands[b].valid) return cands[a].valid;
            if (cands[a].logdet != cands[b].logdet) return cands[a].logdet < cands[b].logdet;
            return a < b;
        });

        const auto finalists =
            std::min<std::size_t>(static_cast<std::size_t>(params.finalists), cands.size());
        std::size_t best_idx = cands.size();
        for (std::size_t f = 0; f < finalists; ++f) {
            Candidate& cand = cands[rank[f]];
            if (!cand.valid) continue;
            for (int s = 0; s < params.max_csteps; ++s) {
                const double before = cand.logdet;
                if (!c_step(x, h, params.assume_centered, cand)) {
                    cand.valid = false;
                    break;
                }
                if (before - cand.logdet < params.det_tol) break;
            }
            if (cand.valid &&
                (best_idx == cands.size() || cand.logdet < cands[best_idx].logdet ||
                 (cand.logdet == cands[best_idx].logdet && rank[f] < best_idx)))
                best_idx = rank[f];
        }
        if (best_idx == cands.size())
            throw std::runtime_error("mcd: singular scatter in every restart");
        best = cands[best_idx];
        for (auto& c : cands)
            if (!c.logdet_history.empty())
                model.cstep_determinants_.push_back(std::move(c.logdet_history));
    }
    if (!best.valid) throw std::runtime_error("mcd: singular scatter");

    model.raw_det_ = std::exp(best.logdet);
    model.correction_ =
        mcd_consistency_factor(p, static_cast<double>(h) / static_cast<double>(n));
    MatrixXd raw_scatter = best.scatter * model.correction_;

    model.raw_location_.assign(best.location.data(), best.location.data() + p);
    model.raw_scatter_.resize(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            model.raw_scatter_[i * p + j] =
                raw_scatter(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    Eigen::LLT<MatrixXd> llt(raw_scatter);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("mcd: corrected scatter not positive-definite");

    // One-step reweighting: every point inside the 0.975 chi-squared band of
    // the raw fit re-enters, the classical estimate over those points
    // replaces the raw one, and a trimming factor restores consistency. The
    // raw subset alone is too narrow a base for well-calibrated estimates;
    // falling back to the raw values covers the degenerate cases.
    VectorXd location = best.location;
    MatrixXd scatter = raw_scatter;
    {
        VectorXd d2 = squared_distances(x, best.location, llt);
        const double gate = stats::chi2_quantile(0.975, static_cast<double>(p));
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < n; ++i)
            if (d2(static_cast<Eigen::Index>(i)) <= gate) kept.push_back(i);
        if (kept.size() > p + 1) {
            VectorXd rw_location;
            MatrixXd rw_scatter;
            estimate(x, kept, params.assume_centered, rw_location, rw_scatter);
            rw_scatter *= mcd_consistency_factor(p, 0.975);
            double rw_logdet = 0.0;
            Eigen::LLT<MatrixXd> rw_llt;
            if (log_det_spd(rw_scatter, rw_logdet, rw_llt)) {
                location = rw_location;
                scatter = rw_scatter;
                llt = rw_llt;
            }
        }
    }

    model.location_.assign(location.data(), location.data() + p);
    model.scatter_.resize(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            model.scatter_[i * p + j] =
                scatter(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    MatrixXd inverse = llt.solve(MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                    static_cast<Eigen::Index>(p)));
    model.scatter_inverse_.assign(inverse.data(), inverse.data() + p * p);

    model.support_.assign(n, false);
    for (auto i : best.subset) model.support_[i] = true;

    if (params.contamination > 0.0)
        model.cutoff_ = stats::quantile_threshold(model.distance_batch(points),
                                                  params.contamination);
    else
        model.cutoff_ = std::sqrt(stats::chi2_quantile(0.975, static_cast<double>(p)));
    return model;
}

McdModel McdModel::restore(std::vector<double> location, std::vector<double> scatter,
                           std::size_t dims, double cutoff, const McdParams& params) {
    if (location.size() != dims || scatter.size() != dims * dims)
        throw std::invalid_argument("mcd: restore shape mismatch");
    McdModel model;
    model.params_ = params;
    model.dims_ = dims;
    model.location_ = std::move(location);
    model.scatter_ = std::move(scatter);
    model.cutoff_ = cutoff;

    MatrixXd s(dims, dims);
    for (std::size_t i = 0; i < dims; ++i)
        for (std::size_t j = 0; j < dims; ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                model.scatter_[i * dims + j];
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("mcd: restored scatter not positive-definite");
    MatrixXd inverse = llt.solve(MatrixXd::Identity(static_cast<Eigen::Index>(dims),
                                                    static_cast<Eigen::Index>(dims)));
    model.scatter_inverse_.assign(inverse.data(), inverse.data() + dims * dims);
    return model;
}

double McdModel::robust_distance(std::span<const double> query) const {
    if (query.size() != dims_)
        throw std::invalid_argument("mcd: query dimension mismatch");
    // d^2 = (x - T)' S^-1 (x - T) over the stored inverse.
    double acc = 0.0;
    std::vector<double> diff(dims_);
    for (std::size_t i = 0; i < dims_; ++i) diff[i] = query[i] - location_[i];
    for (std::size_t i = 0; i < dims_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < dims_; ++j)
            row += scatter_inverse_[i * dims_ + j] * diff[j];
        acc += diff[i] * row;
    }
    return std::sqrt(std::max(acc, 0.0));
}

std::vector<double> McdModel::distance_batch(
    const std::vector<std::vector<double>>& queries) const {
    std::vector<double> out(queries.size());
    const int threads = par::threads();
    if (threads == 1 || queries.size() < 2) {
        for (std::size_t i = 0; i < queries.size(); ++i)
            out[i] = robust_distance(queries[i]);
        return out;
    }
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i)
        out[static_cast<std::size_t>(i)] = robust_distance(queries[static_cast<std::size_t>(i)]);
    return out;
}

Verdict McdModel::classify(std::span<const double> query) const {
    return robust_distance(query) > cutoff_ ? Verdict::anomalous : Verdict::nominal;
}

} // namespace hive
