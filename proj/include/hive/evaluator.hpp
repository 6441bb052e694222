#pragma once

#include "hive/types.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hive {

// Confusion counts with swarm as the positive class. A window labeled with a
// non-swarm anomaly counts as a false positive when flagged: detectors are
// judged purely as swarm detectors.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& other);
};

// Precision/recall/F1 under the reporting conventions: divisions by zero give
// 0, and F1 is marked NA (has_f1 = false) when no positive was ever
// classified correctly.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;     // meaningful only when has_f1
    bool has_f1 = false; // false <=> printed as NA
};

// How the overall row combines per-dataset results: pooled sums the counts
// and computes metrics once from the sums; weighted averages the per-dataset
// metrics by window count, treating NA as 0. Overall counts are plain sums in
// both modes.
enum class AggregationMode { pooled, weighted };

std::string to_string(AggregationMode mode);

struct DatasetReport {
    std::string dataset;
    ConfusionCounts counts;
    Metrics scores;
    // Excluded datasets (ones where no true positive is possible) stay listed
    // in reports but do not contribute to the overall row.
    bool excluded = false;
};

struct EvalReport {
    std::vector<DatasetReport> rows;
    DatasetReport overall; // dataset name "All"
    AggregationMode mode = AggregationMode::pooled;
};

// Counts one dataset's verdicts against its labels.
ConfusionCounts confusion(std::span<const Verdict> predictions,
                          std::span<const Label> labels);

Metrics metrics(const ConfusionCounts& counts);

DatasetReport dataset_report(std::string dataset, const ConfusionCounts& counts,
                             bool excluded = false);

// Combines per-dataset rows into a report with an overall row. Throws when no
// row contributes.
EvalReport aggregate(const std::vector<DatasetReport>& rows, AggregationMode mode);

// Tab-separated table with two-decimal metrics, NA spelled out, the overall
// row tagged with its aggregation mode, and excluded datasets starred.
std::string render_report(const EvalReport& report, const std::string& detector);

// Long-format lines "dataset,detector,metric,value" at full precision, one
// line per metric and count, for plotting tools.
std::string long_format(const EvalReport& report, const std::string& detector);

// Pearson correlation matrices across the selected sensors, computed
// separately over the normal-tagged and the anomalous-tagged days of the
// trace. Missing samples are dropped pairwise; a constant sensor leaves NaN
// in its row and column. A tag with no days at all yields an empty matrix; a
// sensor pair with fewer than two complete samples under a present tag is an
// error.
struct CorrelationReport {
    std::vector<std::string> sensors;
    std::vector<std::vector<double>> normal;    // symmetric, unit diagonal
    std::vector<std::vector<double>> anomalous;
};

CorrelationReport sensor_correlations(const SensorTrace& trace,
                                      const std::vector<std::string>& sensor_ids,
                                      const std::vector<DayTag>& days);

} // namespace hive
