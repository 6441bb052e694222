#include <doctest.h>

#include "hive/lof.hpp"
#include "hive/parallel.hpp"
#include "hive/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace hive;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t d,
                                               double lo = -1.0, double hi = 1.0) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
        for (auto& x : p) x = rng.uniform(lo, hi);
    return pts;
}

} // namespace

TEST_CASE("two points with k = 1 both score exactly 1") {
    LofParams params;
    params.k = 1;
    auto model = LofModel::fit({{0.0, 0.0}, {3.0, 4.0}}, params);
    CHECK(model.reference_scores()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.reference_scores()[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interior grid points sit near 1; a far point scores above 1") {
    // 11x11 integer grid.
    std::vector<std::vector<double>> grid;
    for (int x = 0; x <= 10; ++x)
        for (int y = 0; y <= 10; ++y) grid.push_back({double(x), double(y)});
    LofParams params;
    params.k = 4;
    auto model = LofModel::fit(grid, params);
    // Index of (5,5): 5*11 + 5.
    CHECK(model.reference_scores()[60] == doctest::Approx(1.0).epsilon(0.05));

    CHECK(model.score(std::vector<double>{100.0, 100.0}) > 1.0);
}

TEST_CASE("tight cluster plus one far member flags the far member") {
    Rng rng(derive_seed(7, "lof-cluster"));
    auto pts = random_points(rng, 20, 2, -0.5, 0.5);
    pts.push_back({50.0, 50.0});
    LofParams params;
    params.k = 3;
    auto model = LofModel::fit(pts, params);
    CHECK(model.reference_scores().back() > 1.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        CHECK(model.reference_scores()[i] < model.reference_scores().back());
}

TEST_CASE("query behavior in a uniform cluster") {
    Rng rng(derive_seed(7, "lof-uniform"));
    auto pts = random_points(rng, 60, 2);
    LofParams params;
    params.k = 5;
    auto model = LofModel::fit(pts, params);

    SUBCASE("duplicate of a reference point scores near 1") {
        double s = model.score(pts[17]);
        CHECK(s == doctest::Approx(1.0).epsilon(0.25));
    }
    SUBCASE("far-away query scores above 1") {
        CHECK(model.score(std::vector<double>{200.0, 200.0}) > 1.0);
    }
    SUBCASE("centroid of a symmetric cluster is no outlier") {
        std::vector<std::vector<double>> ring;
        for (int i = 0; i < 12; ++i) {
            double a = 2.0 * std::acos(-1.0) * i / 12.0;
            ring.push_back({std::cos(a), std::sin(a)});
        }
        LofParams rp;
        rp.k = 3;
        auto ring_model = LofModel::fit(ring, rp);
        CHECK(ring_model.score(std::vector<double>{0.0, 0.0}) <= 1.0 + 0.05);
    }
}

TEST_CASE("classification maps score through the threshold") {
    Rng rng(derive_seed(7, "lof-classify"));
    auto pts = random_points(rng, 100, 2);
    SUBCASE("default threshold is the natural boundary 1") {
        LofParams params;
        params.k = 5;
        auto model = LofModel::fit(pts, params);
        CHECK(model.threshold() == 1.0);
        CHECK(model.classify(pts[3]) == Verdict::nominal);
        CHECK(model.classify(std::vector<double>{90.0, -90.0}) == Verdict::anomalous);
    }
    SUBCASE("contamination picks the documented quantile of reference scores") {
        LofParams params;
        params.k = 5;
        params.contamination = 0.1;
        auto model = LofModel::fit(pts, params);
        auto sorted = model.reference_scores();
        std::sort(sorted.begin(), sorted.end());
        CHECK(model.threshold() == sorted[89]); // 90th percentile of 100
        std::size_t flagged = 0;
        for (double s : model.reference_scores())
            if (s > model.threshold()) ++flagged;
        CHECK(flagged == 10);
    }
}

TEST_CASE("brute-force oracle agreement on 50 random datasets") {
    Rng rng(derive_seed(7, "lof-oracle"));
    for (int rep = 0; rep < 50; ++rep) {
        auto n = static_cast<std::size_t>(rng.uniform_int(20, 200));
        auto d = static_cast<std::size_t>(rng.uniform_int(1, 5));
        auto k = static_cast<std::size_t>(rng.uniform_int(1, 10));
        auto pts = random_points(rng, n, d);
        // A few duplicated rows to exercise degenerate reachabilities.
        if (rep % 3 == 0) {
            pts[1] = pts[0];
            pts[2] = pts[0];
        }
        LofParams params;
        params.k = k;
        auto model = LofModel::fit(pts, params);

        auto want_ref = oracle::lof_brute(pts, pts, k, /*self_excluded=*/true);
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(model.reference_scores()[i] ==
                    doctest::Approx(want_ref[i]).epsilon(1e-9));

        auto queries = random_points(rng, 10, d, -1.5, 1.5);
        auto got = model.score_batch(queries);
        auto want = oracle::lof_brute(pts, queries, k, /*self_excluded=*/false);
        for (std::size_t i = 0; i < queries.size(); ++i)
            REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
}

TEST_CASE("metric aliases give identical scores") {
    Rng rng(derive_seed(7, "lof-alias"));
    auto pts = random_points(rng, 80, 3);
    auto queries = random_points(rng, 15, 3, -1.5, 1.5);
    auto score_with = [&](Metric m) {
        LofParams params;
        params.k = 6;
        params.metric = m;
        return LofModel::fit(pts, params).score_batch(queries);
    };
    CHECK(score_with(Metric::l1) == score_with(Metric::cityblock));
    CHECK(score_with(Metric::l1) == score_with(Metric::manhattan));
    CHECK(score_with(Metric::l2) == score_with(Metric::euclidean));
    CHECK(score_with(Metric::infinity_norm) == score_with(Metric::chebyshev));
    // minkowski (p = 3) is deliberately its own metric.
    CHECK(score_with(Metric::minkowski) != score_with(Metric::l2));

    // Each metric family also agrees with the oracle.
    for (auto m : {Metric::l1, Metric::chebyshev, Metric::minkowski}) {
        LofParams params;
        params.k = 6;
        params.metric = m;
        auto got = LofModel::fit(pts, params).score_batch(queries);
        auto want = oracle::lof_brute(pts, queries, 6, false, m);
        for (std::size_t i = 0; i < queries.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
}

TEST_CASE("permuting the reference set leaves scores unchanged") {
    Rng rng(derive_seed(7, "lof-permute"));
    auto pts = random_points(rng, 70, 3);
    auto queries = random_points(rng, 10, 3);
    LofParams params;
    params.k = 4;
    auto base = LofModel::fit(pts, params).score_batch(queries);
    auto shuffled = pts;
    rng.shuffle(shuffled);
    auto perm = LofModel::fit(shuffled, params).score_batch(queries);
    for (std::size_t i = 0; i < queries.size(); ++i)
        CHECK(base[i] == doctest::Approx(perm[i]).epsilon(1e-12));
}

TEST_CASE("all neighbor-search strategies score identically") {
    Rng rng(derive_seed(7, "lof-index"));
    for (auto metric : {Metric::euclidean, Metric::l1, Metric::chebyshev, Metric::minkowski}) {
        auto pts = random_points(rng, 150, 3);
        auto queries = random_points(rng, 25, 3, -1.5, 1.5);
        std::vector<std::vector<double>> results;
        for (auto idx : {NeighborIndex::exhaustive, NeighborIndex::kd_tree,
                         NeighborIndex::ball_tree}) {
            LofParams params;
            params.k = 7;
            params.metric = metric;
            params.index = idx;
            params.leaf_size = 4; // deep trees so pruning really runs
            auto model = LofModel::fit(pts, params);
            auto s = model.score_batch(queries);
            auto r = model.reference_scores();
            s.insert(s.end(), r.begin(), r.end());
            results.push_back(std::move(s));
        }
        CHECK(results[0] == results[1]);
        CHECK(results[0] == results[2]);
    }
}

TEST_CASE("batch scoring is thread-count independent") {
    Rng rng(derive_seed(7, "lof-threads"));
    auto pts = random_points(rng, 120, 3);
    auto queries = random_points(rng, 40, 3);
    LofParams params;
    params.k = 5;
    auto model = LofModel::fit(pts, params);
    par::set_threads(1);
    auto serial = model.score_batch(queries);
    par::set_threads(4);
    auto parallel = model.score_batch(queries);
    par::set_threads(0);
    CHECK(serial == parallel);
}

TEST_CASE("input validation") {
    LofParams params;
    params.k = 3;
    SUBCASE("needs k + 1 distinct points") {
        std::vector<std::vector<double>> dup = {{1, 1}, {1, 1}, {2, 2}, {2, 2}, {3, 3}};
        CHECK_THROWS_AS((void)LofModel::fit(dup, params), std::invalid_argument);
    }
    SUBCASE("k must be positive") {
        LofParams bad;
        bad.k = 0;
        CHECK_THROWS_AS((void)LofModel::fit({{1.0}, {2.0}}, bad), std::invalid_argument);
    }
    SUBCASE("query dimension must match") {
        auto model = LofModel::fit({{1, 1}, {2, 2}, {3, 3}, {4, 5}}, params);
        CHECK_THROWS_AS((void)model.score(std::vector<double>{1.0}), std::invalid_argument);
    }
    SUBCASE("contamination outside [0, 1) is rejected") {
        LofParams bad;
        bad.k = 1;
        bad.contamination = 1.5;
        CHECK_THROWS_AS((void)LofModel::fit({{1.0}, {2.0}}, bad), std::invalid_argument);
    }
}
