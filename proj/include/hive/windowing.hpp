#pragma once

#include "hive/types.hpp"

#include <span>
#include <vector>

namespace hive {

// Slice a trace into fixed-length windows at starts 0, stride, 2*stride, ...
// (sample offsets from trace.start). Each window is labeled by event overlap:
// >= 1 minute shared with a swarm event makes it swarm; otherwise >= 1 minute
// with any other labeled anomaly makes it other_anomaly; otherwise normal.
// Windows containing a missing sample are dropped and counted, not imputed.
// Throws std::invalid_argument for unknown sensors or length > trace duration.
WindowSet make_windows(const SensorTrace& trace,
                       const std::vector<std::string>& sensors,
                       std::size_t length, std::size_t stride,
                       const std::vector<LabeledEvent>& events);

// Same slicing restricted to [day_start, day_start + day_length) of the trace;
// offsets are relative to the day, so per-day window counts are independent of
// where the day sits in the trace.
WindowSet make_windows_in_range(const SensorTrace& trace,
                                const std::vector<std::string>& sensors,
                                std::size_t length, std::size_t stride,
                                const std::vector<LabeledEvent>& events,
                                Minute range_start, Minute range_length);

// Per-sensor z-score parameters over all samples of all training windows.
// Throws std::invalid_argument on empty input or a zero-variance sensor.
Scaler fit_scaler(const std::vector<Window>& training);

Window apply_scaler(const Scaler& scaler, const Window& window);
Window invert_scaler(const Scaler& scaler, const Window& window);

// Sensor-major concatenation: all of sensor 0's values in time order, then
// sensor 1's, and so on. A 2x2 window [[a,b],[c,d]] (rows = time) flattens
// to [a, c, b, d].
std::vector<double> flatten(const Window& window);
Window unflatten(std::span<const double> flat, Minute start,
                 std::size_t length, std::size_t sensors, Label label);

struct SplitConfig {
    std::string training_source;
    double validation_fraction = 0.1; // of the training source's normal days
};

// Day-level Fig.-style split: normal days of the training source are divided
// chronologically into training and a trailing validation block of
// max(1, floor(validation_fraction * n)) days; its anomalous days become the
// holdout; anomalous days of every other source become that source's test
// set. Throws std::invalid_argument when the training source has no normal
// days, no anomalous days (no holdout), or when day tags overlap in time.
SplitPlan build_split(const std::vector<DayTag>& days, const SplitConfig& config);

// Materialize the windows of a day list against its trace.
WindowSet materialize(const SensorTrace& trace,
                      const std::vector<DayTag>& days,
                      const std::vector<LabeledEvent>& events,
                      const std::vector<std::string>& sensors,
                      std::size_t length, std::size_t stride);

} // namespace hive
