#pragma once

#include "hive/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace hive {

// Rule-based swarm detector: a swarm is a maximal run of consecutive samples
// strictly above `threshold` whose length in minutes lies within
// [min_duration, max_duration].
struct RbaConfig {
    double threshold = 35.5;   // degC
    int min_duration = 2;      // minutes
    int max_duration = 20;     // minutes
};

// A detected interval of sample indices, both ends inclusive.
struct RbaDetection {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t length() const { return last - first + 1; }
    bool operator==(const RbaDetection&) const = default;
};

// Scan one dense single-sensor sequence. Runs touching either edge of the
// sequence are not reported: their true duration is unknowable from the
// samples alone. Throws std::invalid_argument on empty input or a config
// violating 0 < min_duration <= max_duration / non-finite threshold.
std::vector<RbaDetection> rba_detect(std::span<const double> series,
                                     const RbaConfig& config);

// Swarm-like runs found in data that was supposed to be clean.
struct RbaVetFinding {
    std::string sensor_id;
    RbaDetection detection; // indices into the vetted sequence
};

// Run rba_detect over every sensor of a trace; an empty report means the
// data carries no swarm-shaped temperature run. NaN samples break runs.
std::vector<RbaVetFinding> vet_training_data(const SensorTrace& trace,
                                             const RbaConfig& config);

} // namespace hive
