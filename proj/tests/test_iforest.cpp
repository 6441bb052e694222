#include <doctest.h>

#include "hive/iforest.hpp"
#include "hive/parallel.hpp"
#include "hive/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using namespace hive;

namespace {

std::vector<std::vector<double>> gaussian_cloud(Rng& rng, std::size_t n, std::size_t d) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
        for (auto& x : p) x = rng.normal();
    return pts;
}

std::size_t external_size_sum(const IsolationTree& tree) {
    std::size_t sum = 0;
    for (const auto& n : tree.nodes)
        if (n.attribute < 0) sum += n.size;
    return sum;
}

std::size_t max_external_depth(const IsolationTree& tree, int node = 0,
                               std::size_t depth = 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.attribute < 0) return depth;
    return std::max(max_external_depth(tree, n.left, depth + 1),
                    max_external_depth(tree, n.right, depth + 1));
}

} // namespace

TEST_CASE("average path length constants") {
    CHECK(avg_path_length(0) == 0.0);
    CHECK(avg_path_length(1) == 0.0);
    CHECK(avg_path_length(2) == 1.0);
    // Frozen evaluations of 2 H(m-1) - 2 (m-1)/m, H via ln + gamma.
    CHECK(avg_path_length(3) == doctest::Approx(1.207392357589623).epsilon(1e-12));
    CHECK(avg_path_length(10) == doctest::Approx(3.748880484475505).epsilon(1e-12));
    CHECK(avg_path_length(256) == doctest::Approx(10.244770920119917).epsilon(1e-12));
    for (std::size_t m = 2; m < 300; ++m)
        CHECK(avg_path_length(m + 1) > avg_path_length(m));
}

TEST_CASE("single tree on two points: one split, both isolated at depth 1") {
    IforestParams params;
    params.n_estimators = 1;
    params.seed = 5;
    auto model = ForestModel::fit({{0.0}, {1.0}}, params);
    const auto& tree = model.trees()[0];
    REQUIRE(tree.nodes.size() == 3);
    int internals = 0, externals = 0;
    for (const auto& n : tree.nodes) (n.attribute >= 0 ? internals : externals)++;
    CHECK(internals == 1);
    CHECK(externals == 2);
    // Each point sits one split deep, matching c(2) = 1 for a pair.
    CHECK(model.path_length(0, std::vector<double>{0.0}) == 1.0);
    CHECK(model.path_length(0, std::vector<double>{1.0}) == 1.0);
}

TEST_CASE("constant data: path collapses to c(m) and the score is exactly 0.5") {
    IforestParams params;
    params.n_estimators = 25;
    params.seed = 3;
    std::vector<std::vector<double>> pts(40, {7.0, 7.0});
    auto model = ForestModel::fit(pts, params);
    // No attribute varies, so every tree is a single external node holding
    // the whole subsample; E(h) = c(m) and s = 2^(-1).
    for (const auto& tree : model.trees()) REQUIRE(tree.nodes.size() == 1);
    auto scores = model.score_batch(pts);
    for (double s : scores) CHECK(s == 0.5);
}

TEST_CASE("score is strictly decreasing in the mean path length") {
    Rng rng(derive_seed(11, "iforest-mono"));
    auto pts = gaussian_cloud(rng, 300, 2);
    IforestParams params;
    params.seed = 9;
    auto model = ForestModel::fit(pts, params);

    auto mean_path = [&](std::span<const double> x) {
        double sum = 0.0;
        for (std::size_t t = 0; t < model.trees().size(); ++t)
            sum += model.path_length(t, x);
        return sum / static_cast<double>(model.trees().size());
    };
    std::vector<double> inlier = {0.0, 0.0}, outlier = {8.0, 8.0};
    CHECK(mean_path(outlier) < mean_path(inlier));
    CHECK(model.score(outlier) > model.score(inlier));
    // Exact relation s = 2^(-E/c(m)).
    for (const auto& q : {inlier, outlier})
        CHECK(model.score(q) ==
              doctest::Approx(std::exp2(-mean_path(q) / avg_path_length(model.subsample_size())))
                  .epsilon(1e-12));
}

TEST_CASE("external node sizes partition the subsample") {
    Rng rng(derive_seed(11, "iforest-sizes"));
    auto pts = gaussian_cloud(rng, 400, 3);
    for (bool bootstrap : {false, true}) {
        IforestParams params;
        params.n_estimators = 30;
        params.bootstrap = bootstrap;
        params.seed = 17;
        auto model = ForestModel::fit(pts, params);
        CHECK(model.subsample_size() == 256); // auto = min(256, 400)
        for (const auto& tree : model.trees()) {
            CHECK(external_size_sum(tree) == model.subsample_size());
            CHECK(max_external_depth(tree) <= model.height_limit());
        }
        // Depth adjustment keeps every path within limit + c(external size).
        double bound = static_cast<double>(model.height_limit()) +
                       avg_path_length(model.subsample_size());
        for (const auto& p : pts)
            for (std::size_t t = 0; t < model.trees().size(); ++t)
                CHECK(model.path_length(t, p) <= bound);
    }
}

TEST_CASE("height limit follows ceil(log2(m))") {
    Rng rng(derive_seed(11, "iforest-limit"));
    auto pts = gaussian_cloud(rng, 100, 2);
    IforestParams params;
    params.max_samples = 64;
    auto model = ForestModel::fit(pts, params);
    CHECK(model.subsample_size() == 64);
    CHECK(model.height_limit() == 6);
    params.max_samples = 100;
    CHECK(ForestModel::fit(pts, params).height_limit() == 7);
}

TEST_CASE("planted far point outscores the cloud for at least 19 of 20 seeds") {
    Rng data_rng(derive_seed(11, "iforest-planted"));
    auto pts = gaussian_cloud(data_rng, 512, 2);
    pts.push_back({10.0, 10.0});
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        IforestParams params;
        params.seed = seed;
        auto model = ForestModel::fit(pts, params);
        auto scores = model.score_batch(pts);
        double inlier_mean = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) inlier_mean += scores[i];
        inlier_mean /= static_cast<double>(pts.size() - 1);
        if (scores.back() > inlier_mean) ++wins;
    }
    CHECK(wins >= 19);
}

TEST_CASE("same seed reproduces the forest bit for bit; threads do not matter") {
    Rng rng(derive_seed(11, "iforest-determinism"));
    auto pts = gaussian_cloud(rng, 300, 3);
    IforestParams params;
    params.n_estimators = 40;
    params.seed = 123;
    params.contamination = 0.1;

    par::set_threads(1);
    auto a = ForestModel::fit(pts, params);
    par::set_threads(4);
    auto b = ForestModel::fit(pts, params);
    par::set_threads(0);

    REQUIRE(a.trees().size() == b.trees().size());
    for (std::size_t t = 0; t < a.trees().size(); ++t) {
        REQUIRE(a.trees()[t].nodes.size() == b.trees()[t].nodes.size());
        for (std::size_t i = 0; i < a.trees()[t].nodes.size(); ++i) {
            const auto &x = a.trees()[t].nodes[i], &y = b.trees()[t].nodes[i];
            CHECK(x.attribute == y.attribute);
            CHECK(x.split == y.split);
            CHECK(x.size == y.size);
        }
    }
    CHECK(a.threshold() == b.threshold());
    CHECK(a.score_batch(pts) == b.score_batch(pts));

    // A different seed grows a different forest.
    params.seed = 124;
    auto c = ForestModel::fit(pts, params);
    CHECK(c.score_batch(pts) != a.score_batch(pts));
}

TEST_CASE("contamination flags the documented count of training points") {
    Rng rng(derive_seed(11, "iforest-contamination"));
    auto pts = gaussian_cloud(rng, 200, 2);
    IforestParams params;
    params.seed = 2;
    params.contamination = 0.1;
    auto model = ForestModel::fit(pts, params);
    auto scores = model.score_batch(pts);
    std::size_t flagged = 0;
    for (double s : scores)
        if (s > model.threshold()) ++flagged;
    CHECK(flagged == 20);
}

TEST_CASE("max_features restricts the attributes a tree may use") {
    Rng rng(derive_seed(11, "iforest-features"));
    auto pts = gaussian_cloud(rng, 200, 4);
    IforestParams params;
    params.max_features = 0.5; // ceil(0.5 * 4) = 2 attributes per tree
    params.seed = 6;
    auto model = ForestModel::fit(pts, params);
    for (const auto& tree : model.trees()) {
        std::set<int> used;
        for (const auto& n : tree.nodes)
            if (n.attribute >= 0) used.insert(n.attribute);
        CHECK(used.size() <= 2);
    }
}

TEST_CASE("input validation") {
    std::vector<std::vector<double>> one = {{1.0, 2.0}};
    IforestParams params;
    CHECK_THROWS_AS((void)ForestModel::fit(one, params), std::invalid_argument);
    std::vector<std::vector<double>> ok = {{1.0}, {2.0}, {3.0}};
    IforestParams bad = params;
    bad.max_features = 0.0;
    CHECK_THROWS_AS((void)ForestModel::fit(ok, bad), std::invalid_argument);
    bad = params;
    bad.contamination = 1.0;
    CHECK_THROWS_AS((void)ForestModel::fit(ok, bad), std::invalid_argument);
    bad = params;
    bad.n_estimators = 0;
    CHECK_THROWS_AS((void)ForestModel::fit(ok, bad), std::invalid_argument);
    auto model = ForestModel::fit(ok, params);
    CHECK_THROWS_AS((void)model.score(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}
