#include "hive/distance.hpp"

#include <cmath>
#include <stdexcept>

namespace hive {

namespace {

enum class Family { max_abs, sum_abs, sum_sq, sum_cube };

Family family_of(Metric m) {
    switch (m) {
    case Metric::chebyshev:
    case Metric::infinity_norm: return Family::max_abs;
    case Metric::cityblock:
    case Metric::l1:
    case Metric::manhattan: return Family::sum_abs;
    case Metric::euclidean:
    case Metric::l2: return Family::sum_sq;
    case Metric::minkowski: return Family::sum_cube;
    }
    throw std::logic_error("unknown metric value");
}

double combine(Family f, double acc) {
    switch (f) {
    case Family::max_abs:
    case Family::sum_abs: return acc;
    case Family::sum_sq: return std::sqrt(acc);
    case Family::sum_cube: return std::cbrt(acc);
    }
    throw std::logic_error("unknown metric family");
}

double accumulate(Family f, double acc, double diff) {
    double a = std::abs(diff);
    switch (f) {
    case Family::max_abs: return std::max(acc, a);
    case Family::sum_abs: return acc + a;
    case Family::sum_sq: return acc + a * a;
    case Family::sum_cube: return acc + a * a * a;
    }
    throw std::logic_error("unknown metric family");
}

} // namespace

std::string to_string(Metric m) {
    switch (m) {
    case Metric::chebyshev: return "chebyshev";
    case Metric::cityblock: return "cityblock";
    case Metric::euclidean: return "euclidean";
    case Metric::infinity_norm: return "infinity";
    case Metric::l1: return "l1";
    case Metric::l2: return "l2";
    case Metric::manhattan: return "manhattan";
    case Metric::minkowski: return "minkowski";
    }
    throw std::logic_error("unknown metric value");
}

Metric metric_from_string(const std::string& s) {
    if (s == "chebyshev") return Metric::chebyshev;
    if (s == "cityblock") return Metric::cityblock;
    if (s == "euclidean") return Metric::euclidean;
    if (s == "infinity") return Metric::infinity_norm;
    if (s == "l1") return Metric::l1;
    if (s == "l2") return Metric::l2;
    if (s == "manhattan") return Metric::manhattan;
    if (s == "minkowski") return Metric::minkowski;
    throw std::invalid_argument("unknown metric: " + s);
}

double metric_distance(Metric m, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("metric_distance: dimension mismatch");
    const Family f = family_of(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc = accumulate(f, acc, a[i] - b[i]);
    return combine(f, acc);
}

double metric_box_distance(Metric m, std::span<const double> point,
                           std::span<const double> lo, std::span<const double> hi) {
    const Family f = family_of(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        double off = 0.0;
        if (point[i] < lo[i]) off = lo[i] - point[i];
        else if (point[i] > hi[i]) off = point[i] - hi[i];
        acc = accumulate(f, acc, off);
    }
    return combine(f, acc);
}

} // namespace hive
