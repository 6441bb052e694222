#include "hive/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hive::stats {

namespace {

// Series expansion, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz), valid for x >= a + 1. Returns Q(a,x).
double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double lower_regularized_gamma(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("lower_regularized_gamma: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return lower_regularized_gamma(df / 2.0, x / 2.0);
}

double chi2_quantile(double prob, double df) {
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("chi2_quantile: prob outside (0,1)");
    double lo = 0.0;
    double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
    while (chi2_cdf(hi, df) < prob) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, df) < prob)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

double quantile_threshold(std::vector<double> scores, double contamination) {
    if (scores.empty()) throw std::invalid_argument("quantile_threshold: empty scores");
    if (!(contamination >= 0.0 && contamination < 1.0))
        throw std::invalid_argument("quantile_threshold: contamination outside [0,1)");
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    std::size_t m = static_cast<std::size_t>(std::floor(contamination * static_cast<double>(n)));
    if (m >= n) m = n - 1;
    return scores[n - 1 - m];
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

} // namespace hive::stats
