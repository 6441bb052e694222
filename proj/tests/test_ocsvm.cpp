#include <doctest.h>

#include "hive/ocsvm.hpp"
#include "hive/parallel.hpp"
#include "hive/rng.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
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

double dual_objective(const OcsvmModel& model) {
    const auto& sv = model.support_vectors();
    const auto& a = model.dual_coefficients();
    double obj = 0.0;
    for (std::size_t i = 0; i < sv.size(); ++i)
        for (std::size_t j = 0; j < sv.size(); ++j)
            obj += a[i] * a[j] * kernel_value(model.params().kernel, sv[i], sv[j]);
    return obj / 2.0;
}

} // namespace

TEST_CASE("kernel formulas match hand-computed values") {
    std::vector<double> x{1.0, 2.0}, y{3.0, 4.0};
    KernelSpec k;
    k.kind = KernelKind::linear;
    k.gamma = 1.0;
    CHECK(kernel_value(k, x, y) == 11.0);
    k.kind = KernelKind::poly;
    k.gamma = 0.5;
    k.coef0 = 1.0;
    k.degree = 3;
    CHECK(kernel_value(k, x, y) == doctest::Approx(274.625).epsilon(1e-14)); // 6.5^3
    k.kind = KernelKind::rbf;
    k.gamma = 0.25;
    CHECK(kernel_value(k, x, y) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(kernel_value(k, x, x) == 1.0);
    k.kind = KernelKind::sigmoid;
    k.gamma = 0.5;
    k.coef0 = 0.0;
    CHECK(kernel_value(k, x, y) == doctest::Approx(std::tanh(5.5)).epsilon(1e-14));

    for (auto kind : {KernelKind::linear, KernelKind::poly, KernelKind::rbf,
                      KernelKind::sigmoid})
        CHECK(kernel_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS((void)kernel_kind_from_string("laplace"), std::invalid_argument);

    k.gamma = 0.0;
    CHECK_THROWS_AS((void)kernel_value(k, x, y), std::invalid_argument);
}

TEST_CASE("identical points give a constant decision and normal verdicts") {
    const std::vector<std::vector<double>> pts(6, std::vector<double>{2.0, -1.0});
    for (auto kind : {KernelKind::linear, KernelKind::poly, KernelKind::rbf,
                      KernelKind::sigmoid}) {
        OcsvmParams params;
        params.kernel.kind = kind;
        params.kernel.gamma = 0.5;
        params.kernel.coef0 = kind == KernelKind::poly ? 1.0 : 0.0;
        params.nu = 0.1;
        auto model = OcsvmModel::fit(pts, params);
        const double first = model.decision(pts[0]);
        for (const auto& p : pts) {
            CHECK(model.decision(p) == first);
            CHECK(model.classify(p) == Verdict::nominal);
        }
    }
}

TEST_CASE("nu bounds the outlier fraction above and the SV fraction below") {
    Rng rng(derive_seed(41, "ocsvm-nu"));
    auto pts = gaussian_cloud(rng, 200, 2);
    for (double nu : {0.05, 0.1, 0.3, 0.5}) {
        CAPTURE(nu);
        OcsvmParams params;
        params.kernel.kind = KernelKind::rbf;
        params.kernel.gamma = 0.5;
        params.nu = nu;
        auto model = OcsvmModel::fit(pts, params);

        const double n = static_cast<double>(pts.size());
        const double c = 1.0 / (nu * n);
        double sum = 0.0;
        for (double a : model.dual_coefficients()) {
            CHECK(a > 0.0);
            CHECK(a <= c * (1.0 + 1e-12));
            sum += a;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        std::size_t outliers = 0;
        for (const auto& p : pts)
            if (model.classify(p) == Verdict::anomalous) ++outliers;
        CHECK(static_cast<double>(outliers) / n <= nu + 0.05);
        CHECK(static_cast<double>(model.support_vectors().size()) / n >= nu - 0.05);
    }
}

TEST_CASE("1-D linear kernel reduces to the sorted-points closed form") {
    Rng rng(derive_seed(41, "ocsvm-linear"));
    for (double nu : {0.25, 0.23}) { // nu*n integral and fractional
        CAPTURE(nu);
        const std::size_t n = 40;
        std::vector<std::vector<double>> pts(n, std::vector<double>(1));
        for (auto& p : pts) p[0] = 10.0 + rng.normal();

        OcsvmParams params;
        params.kernel.kind = KernelKind::linear;
        params.kernel.gamma = 1.0;
        params.nu = nu;
        params.tolerance = 1e-10;
        auto model = OcsvmModel::fit(pts, params);

        // Minimizing (sum a_i x_i)^2 over the box-bounded simplex piles the
        // mass onto the smallest points, in sorted order.
        std::vector<double> sorted(n);
        for (std::size_t i = 0; i < n; ++i) sorted[i] = pts[i][0];
        std::sort(sorted.begin(), sorted.end());
        const double c = 1.0 / (nu * static_cast<double>(n));
        const auto k = static_cast<std::size_t>(nu * static_cast<double>(n));
        double w = 0.0;
        for (std::size_t i = 0; i < k; ++i) w += c * sorted[i];
        const double rem = 1.0 - c * static_cast<double>(k);
        if (rem > 0.0) w += rem * sorted[k];
        const double rho =
            rem > 0.0 ? w * sorted[k] : w * (sorted[k - 1] + sorted[k]) / 2.0;

        double w_model = 0.0;
        for (std::size_t i = 0; i < model.support_vectors().size(); ++i)
            w_model += model.dual_coefficients()[i] * model.support_vectors()[i][0];
        CHECK(w_model == doctest::Approx(w).epsilon(1e-8));
        CHECK(model.rho() == doctest::Approx(rho).epsilon(1e-8));

        // Anomalies are exactly the points below the learned threshold: the
        // k smallest. The free support vector itself sits on the boundary,
        // where only the magnitude of the decision value is constrained.
        std::size_t flagged = 0;
        for (const auto& p : pts) {
            const bool anomaly = model.classify(p) == Verdict::anomalous;
            if (p[0] <= sorted[k - 1])
                CHECK(anomaly);
            else if (rem > 0.0 && p[0] == sorted[k])
                CHECK(std::abs(model.decision(p)) <= 1e-9);
            else
                CHECK_FALSE(anomaly);
            if (anomaly) ++flagged;
        }
        CHECK(flagged >= k);
        CHECK(flagged <= k + (rem > 0.0 ? 1 : 0));
    }
}

TEST_CASE("small instances match the dense QP objective") {
    Rng rng(derive_seed(41, "ocsvm-qp"));
    int checked = 0;
    for (std::size_t n : {20, 35, 50}) {
        auto pts = gaussian_cloud(rng, n, 3);
        for (auto kind : {KernelKind::linear, KernelKind::poly, KernelKind::rbf}) {
            OcsvmParams params;
            params.kernel.kind = kind;
            params.kernel.gamma = 0.7;
            params.kernel.coef0 = kind == KernelKind::poly ? 1.0 : 0.0;
            params.nu = n == 35 ? 0.15 : 0.4;
            params.tolerance = 1e-8;
            auto model = OcsvmModel::fit(pts, params);
            auto reference = oracle::one_class_qp(pts, params.kernel, params.nu, 100000);
            CHECK(std::abs(dual_objective(model) - reference.objective) <= 1e-6);
            ++checked;
        }
    }
    CHECK(checked == 9);
}

TEST_CASE("QP oracle confirms the nu-property at n = 200") {
    Rng rng(derive_seed(41, "ocsvm-qp-200"));
    auto pts = gaussian_cloud(rng, 200, 2);
    OcsvmParams params;
    params.kernel.kind = KernelKind::rbf;
    params.kernel.gamma = 0.5;
    params.nu = 0.1;
    params.tolerance = 1e-8;
    auto model = OcsvmModel::fit(pts, params);
    auto reference = oracle::one_class_qp(pts, params.kernel, params.nu, 20000);
    CHECK(std::abs(dual_objective(model) - reference.objective) <= 1e-6);
}

TEST_CASE("deep interior scores nonnegative, distant queries negative") {
    Rng rng(derive_seed(41, "ocsvm-decision"));
    auto pts = gaussian_cloud(rng, 150, 2);
    OcsvmParams params;
    params.kernel.kind = KernelKind::rbf;
    params.kernel.gamma = 0.5;
    params.nu = 0.1;
    auto model = OcsvmModel::fit(pts, params);

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::max(best, model.decision(p));
    CHECK(best >= 0.0);

    CHECK(model.decision(std::vector<double>{500.0, 500.0}) < 0.0);
    CHECK(model.classify(std::vector<double>{500.0, 500.0}) == Verdict::anomalous);

    // Determinism of repeated evaluation.
    const std::vector<double> q{1.3, -0.4};
    CHECK(model.decision(q) == model.decision(q));
}

TEST_CASE("shrinking changes the scan, not the solution") {
    Rng rng(derive_seed(41, "ocsvm-shrink"));
    auto pts = gaussian_cloud(rng, 300, 2);
    OcsvmParams params;
    params.kernel.kind = KernelKind::rbf;
    params.kernel.gamma = 0.8;
    params.nu = 0.2;
    params.tolerance = 1e-6;
    params.shrinking = true;
    auto on = OcsvmModel::fit(pts, params);
    params.shrinking = false;
    auto off = OcsvmModel::fit(pts, params);

    auto queries = gaussian_cloud(rng, 50, 2);
    for (const auto& q : queries)
        CHECK(std::abs(on.decision(q) - off.decision(q)) <= 10.0 * params.tolerance);
}

TEST_CASE("Gram cache capacity never shows in the results") {
    Rng rng(derive_seed(41, "ocsvm-cache"));
    auto pts = gaussian_cloud(rng, 120, 2);
    OcsvmParams params;
    params.kernel.kind = KernelKind::rbf;
    params.kernel.gamma = 0.5;
    params.nu = 0.3;
    auto full = OcsvmModel::fit(pts, params); // default: full Gram at this size
    params.cache_rows = 3;                    // pathologically small LRU cache
    auto tiny = OcsvmModel::fit(pts, params);

    CHECK(full.rho() == tiny.rho());
    CHECK(full.dual_coefficients() == tiny.dual_coefficients());
    CHECK(full.support_vectors() == tiny.support_vectors());
    CHECK(full.iterations() == tiny.iterations());
}

TEST_CASE("scoring is thread-count independent") {
    Rng rng(derive_seed(41, "ocsvm-threads"));
    auto pts = gaussian_cloud(rng, 100, 3);
    OcsvmParams params;
    params.kernel.gamma = 0.5;
    params.nu = 0.2;
    auto model = OcsvmModel::fit(pts, params);
    auto queries = gaussian_cloud(rng, 64, 3);
    par::set_threads(1);
    auto a = model.decision_batch(queries);
    par::set_threads(4);
    auto b = model.decision_batch(queries);
    par::set_threads(0);
    CHECK(a == b);
}

TEST_CASE("restore reproduces the fitted decision function") {
    Rng rng(derive_seed(41, "ocsvm-restore"));
    auto pts = gaussian_cloud(rng, 80, 2);
    OcsvmParams params;
    params.kernel.gamma = 0.6;
    params.nu = 0.15;
    auto model = OcsvmModel::fit(pts, params);
    auto copy = OcsvmModel::restore(model.support_vectors(), model.dual_coefficients(),
                                    model.rho(), params);
    auto queries = gaussian_cloud(rng, 40, 2);
    for (const auto& q : queries) CHECK(model.decision(q) == copy.decision(q));

    CHECK_THROWS_AS((void)OcsvmModel::restore({}, {}, 0.0, params),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)OcsvmModel::restore({{1.0, 2.0}}, {0.5, 0.5}, 0.0, params),
                    std::invalid_argument);
}

TEST_CASE("parameter validation and non-convergence") {
    Rng rng(derive_seed(41, "ocsvm-validate"));
    auto pts = gaussian_cloud(rng, 30, 2);

    OcsvmParams params;
    params.nu = 0.0;
    CHECK_THROWS_AS((void)OcsvmModel::fit(pts, params), std::invalid_argument);
    params.nu = 1.5;
    CHECK_THROWS_AS((void)OcsvmModel::fit(pts, params), std::invalid_argument);
    params.nu = 0.5;
    params.kernel.gamma = -1.0;
    CHECK_THROWS_AS((void)OcsvmModel::fit(pts, params), std::invalid_argument);
    params.kernel.gamma = 0.5;

    CHECK_THROWS_AS((void)OcsvmModel::fit({{1.0}}, params), std::invalid_argument);
    CHECK_THROWS_AS((void)OcsvmModel::fit({{1.0, 2.0}, {1.0}}, params),
                    std::invalid_argument);

    params.max_iterations = 1;
    CHECK_THROWS_AS((void)OcsvmModel::fit(pts, params), std::runtime_error);
    params.max_iterations = 1000000;

    auto model = OcsvmModel::fit(pts, params);
    CHECK_THROWS_AS((void)model.decision(std::vector<double>{1.0}),
                    std::invalid_argument);

    // nu = 1 is legal: every point is a support vector at the bound.
    params.nu = 1.0;
    auto all_sv = OcsvmModel::fit(pts, params);
    CHECK(all_sv.support_vectors().size() == pts.size());
}

TEST_CASE("the QP oracle itself lands on a feasible point") {
    auto reference = oracle::one_class_qp(
        {{0.0}, {1.0}, {2.0}, {3.0}}, KernelSpec{KernelKind::linear, 1.0, 3, 0.0}, 0.5,
        5000);
    double sum = 0.0;
    for (double a : reference.alpha) {
        CHECK(a >= 0.0);
        CHECK(a <= 0.5 + 1e-12);
        sum += a;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
}
