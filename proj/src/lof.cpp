#include "hive/lof.hpp"

#include "hive/parallel.hpp"
#include "hive/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace hive {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kReachFloor = 1e-12; // lower clamp on reachability distances

} // namespace

std::string to_string(NeighborIndex idx) {
    switch (idx) {
    case NeighborIndex::exhaustive: return "exhaustive";
    case NeighborIndex::kd_tree: return "kd_tree";
    case NeighborIndex::ball_tree: return "ball_tree";
    }
    throw std::logic_error("unknown neighbor index value");
}

NeighborIndex neighbor_index_from_string(const std::string& s) {
    if (s == "exhaustive") return NeighborIndex::exhaustive;
    if (s == "kd_tree") return NeighborIndex::kd_tree;
    if (s == "ball_tree") return NeighborIndex::ball_tree;
    throw std::invalid_argument("unknown neighbor index: " + s);
}

// Exact nearest-neighbor search over the reference set. The three strategies
// share one query interface: the k-th smallest distance, and every index
// within a radius. Tree traversals only ever skip subtrees whose pruning
// bound proves they cannot matter, so all strategies see the same distances.
struct LofModel::Index {
    // The point set is threaded through every call rather than stored: the
    // owning model moves, and a back-pointer would dangle.
    NeighborIndex kind = NeighborIndex::exhaustive;
    Metric metric = Metric::euclidean;
    std::size_t leaf_size = 30;

    struct Node {
        std::vector<double> lo, hi;   // kd-tree bounding box
        std::vector<double> centroid; // ball-tree center
        double radius = 0.0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0; // leaf range into `order`
        bool leaf = false;
    };
    std::vector<Node> nodes;
    std::vector<std::size_t> order; // permutation of point indices

    void build(const std::vector<std::vector<double>>& points, NeighborIndex k,
               Metric m, std::size_t leaf) {
        kind = k;
        metric = m;
        leaf_size = std::max<std::size_t>(1, leaf);
        if (kind == NeighborIndex::exhaustive) return;
        order.resize(points.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        build_node(points, 0, order.size());
    }

    int build_node(const std::vector<std::vector<double>>& points,
                   std::size_t begin, std::size_t end) {
        const std::size_t dim = points.front().size();
        Node node;
        node.begin = begin;
        node.end = end;

        if (kind == NeighborIndex::kd_tree) {
            node.lo.assign(dim, std::numeric_limits<double>::infinity());
            node.hi.assign(dim, -std::numeric_limits<double>::infinity());
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t d = 0; d < dim; ++d) {
                    node.lo[d] = std::min(node.lo[d], points[order[i]][d]);
                    node.hi[d] = std::max(node.hi[d], points[order[i]][d]);
                }
        } else {
            node.centroid.assign(dim, 0.0);
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t d = 0; d < dim; ++d)
                    node.centroid[d] += points[order[i]][d];
            for (auto& c : node.centroid) c /= static_cast<double>(end - begin);
            for (std::size_t i = begin; i < end; ++i)
                node.radius = std::max(
                    node.radius, metric_distance(metric, node.centroid, points[order[i]]));
        }

        bool split_ok = end - begin > leaf_size;
        std::size_t mid = begin + (end - begin) / 2;
        if (split_ok && kind == NeighborIndex::kd_tree) {
            std::size_t axis = 0;
            double spread = -1.0;
            for (std::size_t d = 0; d < dim; ++d)
                if (node.hi[d] - node.lo[d] > spread) {
                    spread = node.hi[d] - node.lo[d];
                    axis = d;
                }
            if (spread <= 0.0) {
                split_ok = false; // all points identical; no useful split
            } else {
                std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(mid),
                                 order.begin() + static_cast<std::ptrdiff_t>(end),
                                 [&](std::size_t a, std::size_t b) {
                                     return points[a][axis] < points[b][axis];
                                 });
            }
        } else if (split_ok) { // ball tree
            if (node.radius <= 0.0) {
                split_ok = false;
            } else {
                // Split along the two mutually far points; fall back to an
                // even split when the partition degenerates.
                std::size_t far_a = order[begin];
                double best = -1.0;
                for (std::size_t i = begin; i < end; ++i) {
                    double d = metric_distance(metric, node.centroid, points[order[i]]);
                    if (d > best) {
                        best = d;
                        far_a = order[i];
                    }
                }
                std::size_t far_b = far_a;
                best = -1.0;
                for (std::size_t i = begin; i < end; ++i) {
                    double d = metric_distance(metric, points[far_a], points[order[i]]);
                    if (d > best) {
                        best = d;
                        far_b = order[i];
                    }
                }
                auto closer_to_a = [&](std::size_t idx) {
                    return metric_distance(metric, points[idx], points[far_a]) <
                           metric_distance(metric, points[idx], points[far_b]);
                };
                auto* base = order.data();
                auto* split = std::partition(base + begin, base + end,
                                             [&](std::size_t idx) { return closer_to_a(idx); });
                mid = static_cast<std::size_t>(split - base);
                if (mid == begin || mid == end) mid = begin + (end - begin) / 2;
            }
        }

        int id = static_cast<int>(nodes.size());
        nodes.push_back(std::move(node));
        if (split_ok) {
            nodes[static_cast<std::size_t>(id)].leaf = false;
            int l = build_node(points, begin, mid);
            int r = build_node(points, mid, end);
            nodes[static_cast<std::size_t>(id)].left = l;
            nodes[static_cast<std::size_t>(id)].right = r;
        } else {
            nodes[static_cast<std::size_t>(id)].leaf = true;
        }
        return id;
    }

    double bound(const Node& n, std::span<const double> q) const {
        if (kind == NeighborIndex::kd_tree)
            return metric_box_distance(metric, q, n.lo, n.hi);
        return std::max(0.0, metric_distance(metric, q, n.centroid) - n.radius);
    }

    // k-th smallest distance from q to the points (skipping `exclude`).
    double kth_distance(const std::vector<std::vector<double>>& points,
                        std::span<const double> q, std::size_t exclude,
                        std::size_t k) const {
        std::priority_queue<double> heap; // max-heap of the k best distances
        auto offer = [&](double d) {
            if (heap.size() < k) {
                heap.push(d);
            } else if (d < heap.top()) {
                heap.pop();
                heap.push(d);
            }
        };
        if (kind == NeighborIndex::exhaustive) {
            for (std::size_t i = 0; i < points.size(); ++i)
                if (i != exclude) offer(metric_distance(metric, q, points[i]));
        } else {
            knn_walk(points, 0, q, exclude, k, heap, offer);
        }
        if (heap.size() < k)
            throw std::invalid_argument("lof: fewer reference points than k");
        return heap.top();
    }

    template <typename Offer>
    void knn_walk(const std::vector<std::vector<double>>& points, int node_id,
                  std::span<const double> q, std::size_t exclude,
                  std::size_t k, std::priority_queue<double>& heap, Offer&& offer) const {
        const Node& n = nodes[static_cast<std::size_t>(node_id)];
        if (heap.size() == k && bound(n, q) > heap.top()) return;
        if (n.leaf) {
            for (std::size_t i = n.begin; i < n.end; ++i)
                if (order[i] != exclude) offer(metric_distance(metric, q, points[order[i]]));
            return;
        }
        double bl = bound(nodes[static_cast<std::size_t>(n.left)], q);
        double br = bound(nodes[static_cast<std::size_t>(n.right)], q);
        int first = n.left, second = n.right;
        if (br < bl) std::swap(first, second);
        knn_walk(points, first, q, exclude, k, heap, offer);
        knn_walk(points, second, q, exclude, k, heap, offer);
    }

    // All indices with d(q, p) <= radius, ascending, skipping `exclude`.
    std::vector<std::size_t> within(const std::vector<std::vector<double>>& points,
                                    std::span<const double> q, std::size_t exclude,
                                    double radius) const {
        std::vector<std::size_t> out;
        if (kind == NeighborIndex::exhaustive) {
            for (std::size_t i = 0; i < points.size(); ++i)
                if (i != exclude && metric_distance(metric, q, points[i]) <= radius)
                    out.push_back(i);
            return out;
        }
        range_walk(points, 0, q, exclude, radius, out);
        // Traversal order depends on the tree; a fixed ordering keeps later
        // floating-point reductions identical across strategies.
        std::sort(out.begin(), out.end());
        return out;
    }

    void range_walk(const std::vector<std::vector<double>>& points, int node_id,
                    std::span<const double> q, std::size_t exclude,
                    double radius, std::vector<std::size_t>& out) const {
        const Node& n = nodes[static_cast<std::size_t>(node_id)];
        if (bound(n, q) > radius) return;
        if (n.leaf) {
            for (std::size_t i = n.begin; i < n.end; ++i)
                if (order[i] != exclude &&
                    metric_distance(metric, q, points[order[i]]) <= radius)
                    out.push_back(order[i]);
            return;
        }
        range_walk(points, n.left, q, exclude, radius, out);
        range_walk(points, n.right, q, exclude, radius, out);
    }
};

LofModel::LofModel() = default;
LofModel::LofModel(LofModel&&) noexcept = default;
LofModel& LofModel::operator=(LofModel&&) noexcept = default;
LofModel::~LofModel() = default;

std::vector<std::size_t> LofModel::neighborhood(std::span<const double> query,
                                                std::size_t exclude) const {
    double kd = index_->kth_distance(query, exclude, params_.k);
    return index_->within(query, exclude, kd);
}

double LofModel::lrd_of(std::span<const double> query,
                        const std::vector<std::size_t>& neigh) const {
    double sum = 0.0;
    for (auto b : neigh) {
        double rd = std::max(kdist_[b], metric_distance(params_.metric, query, points_[b]));
        sum += std::max(rd, kReachFloor);
    }
    return static_cast<double>(neigh.size()) / sum;
}

void LofModel::build(const LofParams& params, bool calibrate_threshold) {
    params_ = params;
    const std::size_t n = points_.size();
    if (params.k < 1) throw std::invalid_argument("lof: k must be >= 1");

    // The precondition counts distinct points: duplicated rows cannot serve
    // as k separate density witnesses.
    auto sorted = points_;
    std::sort(sorted.begin(), sorted.end());
    auto distinct = static_cast<std::size_t>(
        std::distance(sorted.begin(), std::unique(sorted.begin(), sorted.end())));
    if (distinct < params.k + 1)
        throw std::invalid_argument("lof: need at least k + 1 distinct points, have " +
                                    std::to_string(distinct));
    const std::size_t dim = points_.front().size();
    for (const auto& p : points_)
        if (p.size() != dim) throw std::invalid_argument("lof: ragged point set");

    index_ = std::make_unique<Index>();
    index_->build(points_, params.index, params.metric, params.leaf_size);

    kdist_.resize(n);
    std::vector<std::vector<std::size_t>> neigh(n);
    for (std::size_t p = 0; p < n; ++p) {
        kdist_[p] = index_->kth_distance(points_[p], p, params.k);
        neigh[p] = index_->within(points_[p], p, kdist_[p]);
    }
    lrd_.resize(n);
    for (std::size_t p = 0; p < n; ++p) lrd_[p] = lrd_of(points_[p], neigh[p]);

    ref_scores_.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        double nbr = 0.0;
        for (auto b : neigh[p]) nbr += lrd_[b];
        nbr /= static_cast<double>(neigh[p].size());
        ref_scores_[p] = nbr / lrd_[p];
    }

    if (calibrate_threshold) {
        if (params.contamination < 0.0 || params.contamination >= 1.0)
            throw std::invalid_argument("lof: contamination must lie in [0, 1)");
        if (params.contamination > 0.0 && params.contamination < 0.5)
            threshold_ = stats::quantile_threshold(ref_scores_, params.contamination);
        else
            threshold_ = 1.0; // natural inlier/outlier boundary of the score
    }
}

LofModel LofModel::fit(std::vector<std::vector<double>> points, const LofParams& params) {
    if (points.empty()) throw std::invalid_argument("lof: no points");
    LofModel m;
    m.points_ = std::move(points);
    m.build(params, /*calibrate_threshold=*/true);
    return m;
}

LofModel LofModel::restore(std::vector<std::vector<double>> points,
                           const LofParams& params, double threshold) {
    if (points.empty()) throw std::invalid_argument("lof: no points");
    LofModel m;
    m.points_ = std::move(points);
    m.build(params, /*calibrate_threshold=*/false);
    m.threshold_ = threshold;
    return m;
}

double LofModel::score(std::span<const double> query) const {
    if (query.size() != points_.front().size())
        throw std::invalid_argument("lof: query dimension mismatch");
    auto neigh = neighborhood(query, kNone);
    double nbr = 0.0;
    for (auto b : neigh) nbr += lrd_[b];
    nbr /= static_cast<double>(neigh.size());
    return nbr / lrd_of(query, neigh);
}

std::vector<double> LofModel::score_batch(
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

Verdict LofModel::classify(std::span<const double> query) const {
    return score(query) > threshold_ ? Verdict::anomalous : Verdict::nominal;
}

} // namespace hive
