#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hive {

// Minutes since an arbitrary epoch. All traces are on a 1-minute grid after
// ingestion, so a timestamp and a sample index differ only by the trace start.
using Minute = std::int64_t;

enum class Label { normal, swarm, other_anomaly, unlabeled };

std::string to_string(Label label);
Label label_from_string(const std::string& s);

// What a detector says about one window.
enum class Verdict { nominal, anomalous };

enum class DetectorKind { rba, lof, iforest, envelope, ocsvm, autoencoder };

std::string to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(const std::string& s);

// Raw per-source record: one value slot per sensor per minute, NaN = missing.
struct SensorTrace {
    std::string source;                           // dataset name
    std::vector<std::string> sensor_ids;
    Minute start = 0;                             // timestamp of sample 0
    // values[s][t] is sensor s at minute start + t; NaN marks a missing sample.
    std::vector<std::vector<double>> values;

    std::size_t sensors() const { return sensor_ids.size(); }
    std::size_t samples() const { return values.empty() ? 0 : values.front().size(); }
    Minute end() const { return start + static_cast<Minute>(samples()); }

    // Index of a sensor id, or throws std::invalid_argument.
    std::size_t sensor_index(const std::string& id) const;
};

// Ground-truth annotation over [start, end) in minutes.
struct LabeledEvent {
    Label kind = Label::other_anomaly;
    Minute start = 0;
    Minute end = 0;
    bool verified = true;
};

// Fixed-length slice of a trace: `length` consecutive minutes over `sensors`
// channels, stored time-major (data[t * sensors + s]).
struct Window {
    Minute start = 0;
    std::size_t length = 0;
    std::size_t sensors = 0;
    std::vector<double> data;
    Label label = Label::unlabeled;

    double at(std::size_t t, std::size_t s) const { return data[t * sensors + s]; }
    double& at(std::size_t t, std::size_t s) { return data[t * sensors + s]; }
};

struct WindowSet {
    std::vector<Window> windows;
    std::size_t excluded_missing = 0; // windows dropped for containing gaps
};

// Per-sensor z-score parameters, fit on training windows only.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// One calendar day of one source, tagged by the day-level annotation that
// drives the split: normal days feed training/validation, anomalous days
// become holdout (training source) or test (other sources) material.
struct DayTag {
    std::string source;
    Minute start = 0;      // first minute of the day
    Minute length = 1440;
    bool anomalous = false;
};

// Day-level split assignment; windows are materialized from it lazily so the
// same plan serves both the 15-minute and the 1-minute stride.
struct SplitPlan {
    std::string training_source;
    std::vector<DayTag> training;    // normal days of the training source
    std::vector<DayTag> validation;  // chronological tail of the normal days
    std::vector<DayTag> holdout;     // anomalous days of the training source
    // Anomalous days of every other source, keyed by source name.
    std::vector<std::pair<std::string, std::vector<DayTag>>> tests;
};

} // namespace hive
