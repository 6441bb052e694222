#pragma once

#include <span>
#include <string>

namespace hive {

// Distance-metric tags as they appear in the hyperparameter search space.
// Several tags are aliases for the same function: l1 = cityblock = manhattan,
// l2 = euclidean, infinity = chebyshev. minkowski is kept distinct by fixing
// its exponent at p = 3.
enum class Metric {
    chebyshev,
    cityblock,
    euclidean,
    infinity_norm,
    l1,
    l2,
    manhattan,
    minkowski,
};

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

double metric_distance(Metric m, std::span<const double> a, std::span<const double> b);

// Distance from a point to an axis-aligned box [lo, hi], the exact
// nearest-neighbor pruning bound: 0 when the point is inside. Valid for all
// supported metrics because each is monotone in the per-axis offsets.
double metric_box_distance(Metric m, std::span<const double> point,
                           std::span<const double> lo, std::span<const double> hi);

} // namespace hive
