#include "hive/iforest.hpp"

#include "hive/parallel.hpp"
#include "hive/rng.hpp"
#include "hive/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hive {

double avg_path_length(std::size_t m) {
    if (m <= 1) return 0.0;
    if (m == 2) return 1.0;
    constexpr double euler_mascheroni = 0.5772156649015329;
    const double n = static_cast<double>(m);
    const double harmonic = std::log(n - 1.0) + euler_mascheroni;
    return 2.0 * harmonic - 2.0 * (n - 1.0) / n;
}

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& points;
    const std::vector<std::size_t>& features; // attributes this tree may split on
    std::size_t height_limit;
    Rng& rng;
    IsolationTree tree;

    int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
              std::size_t depth) {
        const std::size_t count = end - begin;
        int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        if (count <= 1 || depth >= height_limit) {
            tree.nodes[static_cast<std::size_t>(id)].size = count;
            return id;
        }

        // Candidate attributes that still vary within this node; when none
        // do, the points are indistinguishable and the node goes external.
        std::vector<std::size_t> usable;
        std::vector<std::pair<double, double>> range;
        for (auto f : features) {
            double lo = points[idx[begin]][f], hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                lo = std::min(lo, points[idx[i]][f]);
                hi = std::max(hi, points[idx[i]][f]);
            }
            if (hi > lo) {
                usable.push_back(f);
                range.emplace_back(lo, hi);
            }
        }
        if (usable.empty()) {
            tree.nodes[static_cast<std::size_t>(id)].size = count;
            return id;
        }

        auto pick = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(usable.size()) - 1));
        const std::size_t attr = usable[pick];
        auto [lo, hi] = range[pick];
        double split = rng.uniform(lo, hi);
        // A draw landing exactly on the minimum would leave one side empty;
        // nudging it up keeps both children non-empty.
        if (split <= lo) split = std::nextafter(lo, hi);

        auto* base = idx.data();
        auto* mid_ptr = std::partition(base + begin, base + end, [&](std::size_t p) {
            return points[p][attr] < split;
        });
        auto mid = static_cast<std::size_t>(mid_ptr - base);

        tree.nodes[static_cast<std::size_t>(id)].attribute = static_cast<int>(attr);
        tree.nodes[static_cast<std::size_t>(id)].split = split;
        int l = build(idx, begin, mid, depth + 1);
        int r = build(idx, mid, end, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = l;
        tree.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

IsolationTree build_tree(const std::vector<std::vector<double>>& points,
                         const IforestParams& params, std::size_t subsample,
                         std::size_t height_limit, std::uint64_t tree_seed) {
    Rng rng(tree_seed);
    const std::size_t n = points.size();
    const std::size_t dims = points.front().size();

    std::vector<std::size_t> idx;
    if (params.bootstrap) {
        idx.resize(subsample);
        for (auto& i : idx)
            i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    } else {
        idx = rng.sample_without_replacement(n, subsample);
    }

    auto n_feat = static_cast<std::size_t>(
        std::ceil(params.max_features * static_cast<double>(dims)));
    n_feat = std::clamp<std::size_t>(n_feat, 1, dims);
    std::vector<std::size_t> features =
        n_feat == dims ? [&] {
            std::vector<std::size_t> all(dims);
            for (std::size_t i = 0; i < dims; ++i) all[i] = i;
            return all;
        }()
                       : rng.sample_without_replacement(dims, n_feat);
    std::sort(features.begin(), features.end());

    TreeBuilder builder{points, features, height_limit, rng, {}};
    builder.build(idx, 0, idx.size(), 0);
    return std::move(builder.tree);
}

} // namespace

ForestModel ForestModel::fit(const std::vector<std::vector<double>>& points,
                             const IforestParams& params) {
    const std::size_t n = points.size();
    if (n < 2) throw std::invalid_argument("iforest: need at least 2 points");
    const std::size_t dims = points.front().size();
    for (const auto& p : points)
        if (p.size() != dims) throw std::invalid_argument("iforest: ragged point set");
    if (params.n_estimators < 1)
        throw std::invalid_argument("iforest: n_estimators must be >= 1");
    if (!(params.max_features > 0.0) || params.max_features > 1.0)
        throw std::invalid_argument("iforest: max_features must lie in (0, 1]");
    if (params.contamination < 0.0 || params.contamination >= 1.0)
        throw std::invalid_argument("iforest: contamination must lie in [0, 1)");

    ForestModel model;
    model.params_ = params;
    model.dims_ = dims;
    model.subsample_ = params.max_samples == 0 ? std::min<std::size_t>(256, n)
                                               : std::min(params.max_samples, n);
    if (model.subsample_ < 2)
        throw std::invalid_argument("iforest: subsample size must be >= 2");
    model.height_limit_ = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(model.subsample_))));

    model.trees_.resize(params.n_estimators);
    const int threads = par::threads();
    if (threads == 1) {
        for (std::size_t t = 0; t < params.n_estimators; ++t)
            model.trees_[t] = build_tree(points, params, model.subsample_,
                                         model.height_limit_,
                                         derive_seed(params.seed, "tree", t));
    } else {
        // Per-tree seed streams make the forest independent of scheduling.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(params.n_estimators); ++t)
            model.trees_[static_cast<std::size_t>(t)] =
                build_tree(points, params, model.subsample_, model.height_limit_,
                           derive_seed(params.seed, "tree", static_cast<std::uint64_t>(t)));
    }

    if (params.contamination > 0.0) {
        model.threshold_ =
            stats::quantile_threshold(model.score_batch(points), params.contamination);
    } else {
        model.threshold_ = 0.5; // the score scale's natural normal/anomaly boundary
    }
    return model;
}

ForestModel ForestModel::restore(std::vector<IsolationTree> trees, std::size_t subsample,
                                 std::size_t dims, const IforestParams& params,
                                 double threshold) {
    if (trees.empty()) throw std::invalid_argument("iforest: no trees to restore");
    ForestModel model;
    model.params_ = params;
    model.trees_ = std::move(trees);
    model.subsample_ = subsample;
    model.dims_ = dims;
    model.height_limit_ = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(subsample))));
    model.threshold_ = threshold;
    return model;
}

double ForestModel::path_length(std::size_t tree, std::span<const double> x) const {
    if (x.size() != dims_) throw std::invalid_argument("iforest: dimension mismatch");
    const auto& nodes = trees_[tree].nodes;
    std::size_t depth = 0;
    int cur = 0;
    while (nodes[static_cast<std::size_t>(cur)].attribute >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(cur)];
        cur = x[static_cast<std::size_t>(node.attribute)] < node.split ? node.left
                                                                       : node.right;
        ++depth;
    }
    return static_cast<double>(depth) +
           avg_path_length(nodes[static_cast<std::size_t>(cur)].size);
}

double ForestModel::score(std::span<const double> x) const {
    // Normalizing each path before averaging keeps the ratio exact when a
    // path equals c(m) itself (degenerate trees), so s lands on 0.5 exactly.
    const double norm = avg_path_length(subsample_);
    double sum = 0.0;
    for (std::size_t t = 0; t < trees_.size(); ++t) sum += path_length(t, x) / norm;
    return std::exp2(-sum / static_cast<double>(trees_.size()));
}

std::vector<double> ForestModel::score_batch(
    const std::vector<std::vector<double>>& queries) const {
    std::vector<double> out(queries.size());
    const int threads = par::threads();
    if (threads == 1 || queries.size() < 2) {
        for (std::size_t i = 0; i < queries.size(); ++i) out[i] = score(queries[i]);
        return out;
    }
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i)
        out[static_cast<std::size_t>(i)] = score(queries[static_cast<std::size_t>(i)]);
    return out;
}

Verdict ForestModel::classify(std::span<const double> x) const {
    return score(x) > threshold_ ? Verdict::anomalous : Verdict::nominal;
}

} // namespace hive
