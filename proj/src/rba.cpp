#include "hive/rba.hpp"

#include <cmath>
#include <stdexcept>

namespace hive {

namespace {

void check_config(const RbaConfig& c) {
    if (!std::isfinite(c.threshold))
        throw std::invalid_argument("rba: threshold must be finite");
    if (c.min_duration <= 0 || c.min_duration > c.max_duration)
        throw std::invalid_argument("rba: need 0 < min_duration <= max_duration");
}

} // namespace

std::vector<RbaDetection> rba_detect(std::span<const double> series,
                                     const RbaConfig& config) {
    check_config(config);
    if (series.empty())
        throw std::invalid_argument("rba: empty series");

    // A sample extends a run iff it is a real reading strictly above the
    // threshold. NaN neither extends a run nor bounds one: like the sequence
    // edge, a gap leaves the run's true duration unknowable, so runs touching
    // an edge or a gap are never reported.
    auto above = [&](std::size_t i) {
        return !std::isnan(series[i]) && series[i] > config.threshold;
    };
    auto bounds = [&](std::size_t i) { // valid sub-threshold boundary sample
        return !std::isnan(series[i]) && series[i] <= config.threshold;
    };

    std::vector<RbaDetection> out;
    const std::size_t n = series.size();
    std::size_t i = 0;
    while (i < n) {
        if (!above(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && above(j + 1)) ++j;
        const std::size_t len = j - i + 1;
        const bool left_ok = i > 0 && bounds(i - 1);
        const bool right_ok = j + 1 < n && bounds(j + 1);
        if (left_ok && right_ok &&
            len >= static_cast<std::size_t>(config.min_duration) &&
            len <= static_cast<std::size_t>(config.max_duration))
            out.push_back({i, j});
        i = j + 1;
    }
    return out;
}

std::vector<RbaVetFinding> vet_training_data(const SensorTrace& trace,
                                             const RbaConfig& config) {
    check_config(config);
    std::vector<RbaVetFinding> findings;
    for (std::size_t s = 0; s < trace.sensors(); ++s) {
        if (trace.values[s].empty()) continue;
        for (const auto& d : rba_detect(trace.values[s], config))
            findings.push_back({trace.sensor_ids[s], d});
    }
    return findings;
}

} // namespace hive
