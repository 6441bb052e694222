#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracle {

std::vector<hive::RbaDetection> rba_by_definition(std::span<const double> series,
                                                  const hive::RbaConfig& config) {
    const std::size_t n = series.size();
    auto above = [&](std::size_t i) {
        return !std::isnan(series[i]) && series[i] > config.threshold;
    };
    auto below = [&](std::size_t i) {
        return !std::isnan(series[i]) && series[i] <= config.threshold;
    };
    std::vector<hive::RbaDetection> out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!below(i - 1)) continue;
        for (std::size_t j = i; j + 1 < n; ++j) {
            if (!above(j)) break; // [i, j] no longer all-above
            if (!below(j + 1)) continue;
            const std::size_t len = j - i + 1;
            if (len >= static_cast<std::size_t>(config.min_duration) &&
                len <= static_cast<std::size_t>(config.max_duration))
                out.push_back({i, j});
        }
    }
    return out;
}

std::vector<double> lof_brute(const std::vector<std::vector<double>>& reference,
                              const std::vector<std::vector<double>>& queries,
                              std::size_t k, bool self_excluded, hive::Metric metric) {
    const std::size_t n = reference.size();
    auto dist = [metric](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        switch (metric) {
        case hive::Metric::euclidean:
        case hive::Metric::l2:
            for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
            return std::sqrt(s);
        case hive::Metric::cityblock:
        case hive::Metric::l1:
        case hive::Metric::manhattan:
            for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
            return s;
        case hive::Metric::chebyshev:
        case hive::Metric::infinity_norm:
            for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
            return s;
        case hive::Metric::minkowski: // exponent 3
            for (std::size_t i = 0; i < a.size(); ++i)
                s += std::abs(a[i] - b[i]) * std::abs(a[i] - b[i]) * std::abs(a[i] - b[i]);
            return std::cbrt(s);
        }
        throw std::logic_error("lof_brute: unknown metric");
    };

    // k-distance of each reference point and its tie-inclusive neighborhood,
    // computed over the other reference points.
    std::vector<double> kdist(n);
    std::vector<std::vector<std::size_t>> nbr(n);
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<double> d;
        for (std::size_t q = 0; q < n; ++q)
            if (q != p) d.push_back(dist(reference[p], reference[q]));
        std::sort(d.begin(), d.end());
        kdist[p] = d[k - 1];
        for (std::size_t q = 0; q < n; ++q)
            if (q != p && dist(reference[p], reference[q]) <= kdist[p])
                nbr[p].push_back(q);
    }

    // lrd(p) = 1 / mean over neighbors B of max(kdist(B), d(p, B)), with each
    // reachability distance clamped below by 1e-12 so duplicate-heavy sets
    // stay finite.
    auto lrd_of = [&](const std::vector<double>& point,
                      const std::vector<std::size_t>& neighborhood) {
        double sum = 0.0;
        for (auto b : neighborhood)
            sum += std::max({kdist[b], dist(point, reference[b]), 1e-12});
        return static_cast<double>(neighborhood.size()) / sum;
    };
    std::vector<double> lrd(n);
    for (std::size_t p = 0; p < n; ++p) lrd[p] = lrd_of(reference[p], nbr[p]);

    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& qv : queries) {
        // The query's neighborhood over the reference set. When the query is
        // itself a reference point (fit-time scoring), that point must not be
        // its own neighbor; the caller signals this with self_excluded and by
        // passing queries == reference.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::size_t self = n;
        if (self_excluded) {
            for (std::size_t q = 0; q < n; ++q)
                if (reference[q] == qv) { self = q; break; }
            if (self == n) throw std::logic_error("lof_brute: query not in reference set");
        }
        std::vector<double> d;
        for (std::size_t q = 0; q < n; ++q)
            if (q != self) d.push_back(dist(qv, reference[q]));
        std::sort(d.begin(), d.end());
        double kd = d[k - 1];
        std::vector<std::size_t> neigh;
        for (std::size_t q = 0; q < n; ++q)
            if (q != self && dist(qv, reference[q]) <= kd) neigh.push_back(q);

        double q_lrd = lrd_of(qv, neigh);
        double nbr_lrd = 0.0;
        for (auto b : neigh) nbr_lrd += lrd[b];
        nbr_lrd /= static_cast<double>(neigh.size());
        out.push_back(nbr_lrd / q_lrd);
    }
    return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("roc_auc: bad input");
    // Rank-sum (Mann-Whitney) formulation with midranks for ties.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == 1) {
            pos += 1;
            rank_sum += rank[t];
        } else {
            neg += 1;
        }
    }
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: one class only");
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

namespace {

double qp_kernel(const hive::KernelSpec& kernel, const std::vector<double>& a,
                 const std::vector<double>& b) {
    double dp = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dp += a[i] * b[i];
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    switch (kernel.kind) {
    case hive::KernelKind::linear: return dp;
    case hive::KernelKind::poly:
        return std::pow(kernel.gamma * dp + kernel.coef0, kernel.degree);
    case hive::KernelKind::rbf: return std::exp(-kernel.gamma * d2);
    case hive::KernelKind::sigmoid: return std::tanh(kernel.gamma * dp + kernel.coef0);
    }
    throw std::logic_error("one_class_qp: unknown kernel");
}

// Euclidean projection onto { 0 <= a_i <= c, sum a = 1 } by bisection on the
// simplex multiplier.
void project_box_simplex(std::vector<double>& v, double c) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double lo = *mn - c, hi = *mx; // sum at lo is n*c >= 1, at hi it is 0
    for (int it = 0; it < 200; ++it) {
        const double theta = (lo + hi) / 2.0;
        double sum = 0.0;
        for (double x : v) sum += std::clamp(x - theta, 0.0, c);
        (sum >= 1.0 ? lo : hi) = theta;
    }
    const double theta = (lo + hi) / 2.0;
    for (double& x : v) x = std::clamp(x - theta, 0.0, c);
}

} // namespace

OneClassQp one_class_qp(const std::vector<std::vector<double>>& points,
                        const hive::KernelSpec& kernel, double nu,
                        std::size_t iterations) {
    const std::size_t n = points.size();
    if (n == 0 || !(nu > 0.0) || nu > 1.0)
        throw std::invalid_argument("one_class_qp: bad input");
    const double c = 1.0 / (nu * static_cast<double>(n));

    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            q[i * n + j] = q[j * n + i] = qp_kernel(kernel, points[i], points[j]);

    // Step size from the infinity-norm bound on the top eigenvalue.
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
        norm = std::max(norm, row);
    }
    const double step = 1.0 / std::max(norm, 1e-12);

    // FISTA from the feasible uniform start.
    std::vector<double> alpha(n, 1.0 / static_cast<double>(n));
    std::vector<double> y = alpha, next(n), grad(n);
    double t = 1.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += q[i * n + j] * y[j];
            grad[i] = acc;
        }
        for (std::size_t i = 0; i < n; ++i) next[i] = y[i] - step * grad[i];
        project_box_simplex(next, c);
        const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        for (std::size_t i = 0; i < n; ++i)
            y[i] = next[i] + (t - 1.0) / t_next * (next[i] - alpha[i]);
        alpha = next;
        t = t_next;
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += q[i * n + j] * alpha[j];
        objective += alpha[i] * acc;
    }
    return {std::move(alpha), objective / 2.0};
}

} // namespace oracle
