#include "hive/ocsvm.hpp"

#include "hive/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <stdexcept>
#include <unordered_map>

namespace hive {

namespace {

void validate_kernel(const KernelSpec& kernel) {
    if (!(kernel.gamma > 0.0))
        throw std::invalid_argument("ocsvm: kernel gamma must be positive");
    if (kernel.kind == KernelKind::poly && kernel.degree < 1)
        throw std::invalid_argument("ocsvm: poly degree must be >= 1");
}

double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

double kernel_value_unchecked(const KernelSpec& kernel, std::span<const double> x,
                              std::span<const double> y) {
    switch (kernel.kind) {
    case KernelKind::linear:
        return dot(x, y);
    case KernelKind::poly: {
        const double base = kernel.gamma * dot(x, y) + kernel.coef0;
        double value = base;
        for (int k = 1; k < kernel.degree; ++k) value *= base;
        return value;
    }
    case KernelKind::rbf:
        return std::exp(-kernel.gamma * squared_distance(x, y));
    case KernelKind::sigmoid:
        return std::tanh(kernel.gamma * dot(x, y) + kernel.coef0);
    }
    throw std::logic_error("ocsvm: unknown kernel kind");
}

// Gram rows on demand: the full matrix at small n, a bounded LRU row cache
// beyond that. Rows are recomputed identically on eviction, so the cache
// size never affects the iterates.
class Gram {
public:
    Gram(const std::vector<std::vector<double>>& points, const KernelSpec& kernel,
         std::size_t cache_rows)
        : points_(points), kernel_(kernel), n_(points.size()) {
        std::size_t capacity = cache_rows;
        if (capacity == 0) capacity = n_ <= 4096 ? n_ : (1u << 28) / (8 * n_);
        capacity_ = std::max<std::size_t>(capacity, 2);
        if (capacity_ >= n_) {
            full_.resize(n_ * n_);
            const int threads = par::threads();
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_); ++i)
                fill_row(static_cast<std::size_t>(i), &full_[static_cast<std::size_t>(i) * n_]);
        }
    }

    const double* row(std::size_t i) {
        if (!full_.empty()) return &full_[i * n_];
        if (auto it = lookup_.find(i); it != lookup_.end()) {
            rows_.splice(rows_.begin(), rows_, it->second);
            return it->second->values.data();
        }
        if (rows_.size() == capacity_) {
            lookup_.erase(rows_.back().index);
            rows_.pop_back();
        }
        rows_.push_front({i, std::vector<double>(n_)});
        fill_row(i, rows_.front().values.data());
        lookup_[i] = rows_.begin();
        return rows_.front().values.data();
    }

    double diagonal(std::size_t i) const {
        return kernel_value_unchecked(kernel_, points_[i], points_[i]);
    }

private:
    void fill_row(std::size_t i, double* out) const {
        for (std::size_t j = 0; j < n_; ++j)
            out[j] = kernel_value_unchecked(kernel_, points_[i], points_[j]);
    }

    struct CachedRow {
        std::size_t index;
        std::vector<double> values;
    };

    const std::vector<std::vector<double>>& points_;
    const KernelSpec& kernel_;
    std::size_t n_;
    std::size_t capacity_ = 0;
    std::vector<double> full_;
    std::list<CachedRow> rows_;
    std::unordered_map<std::size_t, std::list<CachedRow>::iterator> lookup_;
};

} // namespace

std::string to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::poly: return "poly";
    case KernelKind::rbf: return "rbf";
    case KernelKind::sigmoid: return "sigmoid";
    }
    throw std::logic_error("ocsvm: unknown kernel kind");
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "poly") return KernelKind::poly;
    if (name == "rbf") return KernelKind::rbf;
    if (name == "sigmoid") return KernelKind::sigmoid;
    throw std::invalid_argument("ocsvm: unknown kernel '" + name + "'");
}

double kernel_value(const KernelSpec& kernel, std::span<const double> x,
                    std::span<const double> y) {
    validate_kernel(kernel);
    if (x.size() != y.size())
        throw std::invalid_argument("ocsvm: kernel arguments differ in length");
    return kernel_value_unchecked(kernel, x, y);
}

OcsvmModel OcsvmModel::fit(const std::vector<std::vector<double>>& points,
                           const OcsvmParams& params) {
    const std::size_t n = points.size();
    if (n < 2) throw std::invalid_argument("ocsvm: need at least two points");
    const std::size_t dims = points.front().size();
    if (dims == 0) throw std::invalid_argument("ocsvm: zero-dimensional points");
    for (const auto& p : points)
        if (p.size() != dims) throw std::invalid_argument("ocsvm: ragged point set");
    validate_kernel(params.kernel);
    if (!(params.nu > 0.0) || params.nu > 1.0)
        throw std::invalid_argument("ocsvm: nu must lie in (0, 1]");
    if (!(params.tolerance > 0.0))
        throw std::invalid_argument("ocsvm: tolerance must be positive");
    if (params.max_iterations == 0)
        throw std::invalid_argument("ocsvm: max_iterations must be >= 1");

    const double c = 1.0 / (params.nu * static_cast<double>(n));
    Gram gram(points, params.kernel, params.cache_rows);

    // Feasible start: the first floor(nu n) coefficients at the upper bound,
    // the remainder (if any) on the next index.
    std::vector<double> alpha(n, 0.0);
    const auto full = std::min<std::size_t>(
        static_cast<std::size_t>(params.nu * static_cast<double>(n)), n);
    for (std::size_t i = 0; i < full; ++i) alpha[i] = c;
    double remainder = 1.0 - c * static_cast<double>(full);
    if (remainder > 0.0 && full < n) alpha[full] = remainder;

    // Gradient of the objective: g = Q alpha.
    std::vector<double> g(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) continue;
        const double* row = gram.row(j);
        for (std::size_t i = 0; i < n; ++i) g[i] += alpha[j] * row[i];
    }

    // Two-coordinate descent on the maximal violating pair: raise the
    // lowest-gradient coefficient that can grow, lower the highest-gradient
    // one that can shrink. Shrinking only narrows the selection scan; the
    // gradient stays exact for every index throughout.
    std::vector<char> active(n, 1);
    bool may_shrink = params.shrinking;
    constexpr std::size_t shrink_period = 1000;
    std::size_t iterations = 0;
    bool converged = false;

    while (iterations < params.max_iterations) {
        std::size_t up = n, low = n;
        double g_up = std::numeric_limits<double>::infinity();
        double g_low = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (alpha[i] < c && g[i] < g_up) {
                g_up = g[i];
                up = i;
            }
            if (alpha[i] > 0.0 && g[i] > g_low) {
                g_low = g[i];
                low = i;
            }
        }

        if (up == n || low == n || g_low - g_up <= params.tolerance) {
            if (std::find(active.begin(), active.end(), char(0)) == active.end()) {
                converged = true;
                break;
            }
            // Optimal on the restricted set: widen back to every index and
            // re-check before accepting.
            std::fill(active.begin(), active.end(), char(1));
            may_shrink = false;
            continue;
        }

        ++iterations;
        const double* row_up = gram.row(up);
        const double* row_low = gram.row(low);
        const double eta =
            std::max(gram.diagonal(up) + gram.diagonal(low) - 2.0 * row_up[low], 1e-12);
        const double head = c - alpha[up];
        const double delta = std::min({(g_low - g_up) / eta, head, alpha[low]});
        // Exact landings keep the bound states clean: a - a is zero in
        // floating point but a + (c - a) need not equal c.
        alpha[up] = delta == head ? c : alpha[up] + delta;
        alpha[low] -= delta;
        for (std::size_t i = 0; i < n; ++i)
            g[i] += delta * (row_up[i] - row_low[i]);

        if (may_shrink && iterations % shrink_period == 0) {
            // Indices that cannot join a violating pair while the optimality
            // interval sits inside (g_up, g_low) drop out of the scan.
            for (std::size_t i = 0; i < n; ++i) {
                if (!active[i]) continue;
                if (alpha[i] == 0.0 && g[i] > g_low)
                    active[i] = 0;
                else if (alpha[i] == c && g[i] < g_up)
                    active[i] = 0;
            }
        }
    }
    if (!converged)
        throw std::runtime_error("ocsvm: no convergence within " +
                                 std::to_string(params.max_iterations) + " iterations");

    // Offset: the decision surface passes through the free support vectors;
    // without any, the midpoint of the feasible interval serves.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double lb = -std::numeric_limits<double>::infinity();
    double ub = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0 && alpha[i] < c) {
            free_sum += g[i];
            ++free_count;
        }
        if (alpha[i] > 0.0) lb = std::max(lb, g[i]);
        if (alpha[i] < c) ub = std::min(ub, g[i]);
    }
    double rho;
    if (free_count > 0)
        rho = free_sum / static_cast<double>(free_count);
    else if (std::isinf(ub))
        rho = lb;
    else
        rho = (lb + ub) / 2.0;

    OcsvmModel model;
    model.params_ = params;
    model.dims_ = dims;
    model.rho_ = rho;
    model.iterations_ = iterations;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] <= 0.0) continue;
        model.svs_.push_back(points[i]);
        model.coefs_.push_back(alpha[i]);
    }
    return model;
}

OcsvmModel OcsvmModel::restore(std::vector<std::vector<double>> support_vectors,
                               std::vector<double> coefficients, double rho,
                               const OcsvmParams& params) {
    validate_kernel(params.kernel);
    if (support_vectors.empty() || support_vectors.size() != coefficients.size())
        throw std::invalid_argument("ocsvm: restore shape mismatch");
    const std::size_t dims = support_vectors.front().size();
    for (const auto& sv : support_vectors)
        if (sv.size() != dims || dims == 0)
            throw std::invalid_argument("ocsvm: restore shape mismatch");
    OcsvmModel model;
    model.params_ = params;
    model.dims_ = dims;
    model.svs_ = std::move(support_vectors);
    model.coefs_ = std::move(coefficients);
    model.rho_ = rho;
    return model;
}

double OcsvmModel::decision(std::span<const double> x) const {
    if (x.size() != dims_)
        throw std::invalid_argument("ocsvm: query dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < svs_.size(); ++i)
        acc += coefs_[i] * kernel_value_unchecked(params_.kernel, svs_[i], x);
    return acc - rho_;
}

std::vector<double> OcsvmModel::decision_batch(
    const std::vector<std::vector<double>>& queries) const {
    std::vector<double> out(queries.size());
    const int threads = par::threads();
    if (threads == 1 || queries.size() < 2) {
        for (std::size_t i = 0; i < queries.size(); ++i) out[i] = decision(queries[i]);
        return out;
    }
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i)
        out[static_cast<std::size_t>(i)] = decision(queries[static_cast<std::size_t>(i)]);
    return out;
}

Verdict OcsvmModel::classify(std::span<const double> x) const {
    return decision(x) < 0.0 ? Verdict::anomalous : Verdict::nominal;
}

} // namespace hive
