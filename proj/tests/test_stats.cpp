#include <doctest.h>

#include "hive/stats.hpp"

#include <cmath>
#include <vector>

namespace st = hive::stats;

TEST_CASE("chi-squared CDF matches closed forms") {
    // df=2 has CDF 1 - exp(-x/2).
    for (double x : {0.5, 1.0, 2.0, 5.0, 10.0})
        CHECK(st::chi2_cdf(x, 2) == doctest::Approx(1.0 - std::exp(-x / 2.0)).epsilon(1e-10));
    // df=1: CDF(x) = erf(sqrt(x/2)).
    for (double x : {0.5, 1.0, 4.0})
        CHECK(st::chi2_cdf(x, 1) == doctest::Approx(std::erf(std::sqrt(x / 2.0))).epsilon(1e-10));
}

TEST_CASE("chi-squared quantile inverts the CDF and hits frozen values") {
    for (double df : {1.0, 2.0, 5.0, 60.0})
        for (double p : {0.1, 0.5, 0.975}) {
            double q = st::chi2_quantile(p, df);
            CHECK(st::chi2_cdf(q, df) == doctest::Approx(p).epsilon(1e-9));
        }
    // Reference quantiles at 0.975 (independent tables).
    CHECK(st::chi2_quantile(0.975, 1) == doctest::Approx(5.023886187314888).epsilon(1e-9));
    CHECK(st::chi2_quantile(0.975, 2) == doctest::Approx(7.377758908227871).epsilon(1e-9));
    CHECK(st::chi2_quantile(0.975, 3) == doctest::Approx(9.348403604496148).epsilon(1e-9));
    CHECK(st::chi2_quantile(0.975, 10) == doctest::Approx(20.483177350807388).epsilon(1e-9));
    CHECK(st::chi2_quantile(0.975, 180) == doctest::Approx(219.04431678751286).epsilon(1e-9));
}

TEST_CASE("quantile_threshold flags exactly floor(c * n) scores") {
    std::vector<double> scores;
    for (int i = 1; i <= 10; ++i) scores.push_back(i); // 1..10
    SUBCASE("c = 0.3 flags the top 3") {
        double th = st::quantile_threshold(scores, 0.3);
        CHECK(th == 7.0);
        int flagged = 0;
        for (double s : scores)
            if (s > th) ++flagged;
        CHECK(flagged == 3);
    }
    SUBCASE("c = 0 flags nothing") {
        double th = st::quantile_threshold(scores, 0.0);
        CHECK(th == 10.0);
        for (double s : scores) CHECK_FALSE(s > th);
    }
    SUBCASE("c just under 1 flags all but one") {
        double th = st::quantile_threshold(scores, 0.95);
        CHECK(th == 1.0);
        int flagged = 0;
        for (double s : scores)
            if (s > th) ++flagged;
        CHECK(flagged == 9);
    }
    SUBCASE("ties cannot be split: duplicates at the cut all stay unflagged") {
        std::vector<double> tied = {1, 2, 2, 2, 3};
        double th = st::quantile_threshold(tied, 0.4); // floor(2) above
        CHECK(th == 2.0);
        int flagged = 0;
        for (double s : tied)
            if (s > th) ++flagged;
        CHECK(flagged == 1); // only the 3; the tied 2s sit at the threshold
    }
    SUBCASE("rejects empty input and c >= 1") {
        CHECK_THROWS(st::quantile_threshold({}, 0.1));
        CHECK_THROWS(st::quantile_threshold(scores, 1.0));
        CHECK_THROWS(st::quantile_threshold(scores, -0.1));
    }
}

TEST_CASE("pearson correlation basics") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 4, 6, 8, 10};
    CHECK(st::pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> yn = {10, 8, 6, 4, 2};
    CHECK(st::pearson(x, yn) == doctest::Approx(-1.0).epsilon(1e-12));
    std::vector<double> c = {3, 3, 3, 3, 3};
    CHECK(std::isnan(st::pearson(x, c)));
    // A hand-computed non-degenerate case.
    std::vector<double> u = {1, 2, 3};
    std::vector<double> v = {1, 3, 2};
    CHECK(st::pearson(u, v) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mean and population variance") {
    std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(st::mean(v) == doctest::Approx(5.0));
    CHECK(st::variance(v) == doctest::Approx(4.0));
}
