#pragma once

#include "hive/autoencoder.hpp"
#include "hive/evaluator.hpp"
#include "hive/iforest.hpp"
#include "hive/lof.hpp"
#include "hive/mcd.hpp"
#include "hive/ocsvm.hpp"
#include "hive/rba.hpp"
#include "hive/tuner.hpp"
#include "hive/types.hpp"
#include "hive/windowing.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hive {

// ---------------------------------------------------------------------------
// Timestamps. All file formats use ISO-8601 UTC with second precision,
// "YYYY-MM-DDTHH:MM:SSZ"; parsing is strict (a value must re-render to the
// exact input text).
std::string format_timestamp(std::int64_t seconds_since_epoch);
std::int64_t parse_timestamp(const std::string& text);

// ---------------------------------------------------------------------------
// Trace files: CSV with header `timestamp,<sensor_id>,...`, one row per
// minute, empty cell = missing value. Values are written with 17 significant
// digits so a write/ingest round trip is bit-exact, missing markers included.

void write_trace_csv(const std::filesystem::path& path, const SensorTrace& trace);

// Reads and validates a trace file: timestamps must be minute-aligned and
// strictly increasing (duplicates and reversals are rejected with the line
// number); skipped minutes are preserved as missing samples.
SensorTrace ingest(const std::filesystem::path& path, const std::string& source);

// Sub-minute data prior to downsampling: a regular grid of `period_seconds`
// between consecutive samples, NaN marking missing readings.
struct RawTrace {
    std::string source;
    std::vector<std::string> sensor_ids;
    std::int64_t start_second = 0;
    std::int64_t period_seconds = 1;
    std::vector<std::vector<double>> values; // [sensor][sample]
};

// Per-minute mean of the available samples in each minute bucket; a minute
// with no available samples becomes missing. Throws std::invalid_argument
// when the period is not in [1, 59] seconds or rows are misshaped.
SensorTrace downsample_to_minutes(const RawTrace& raw);

// ---------------------------------------------------------------------------
// Label files: CSV `start,end,kind,verified` covering both minute-range
// events (kind swarm | other_anomaly) and day tags (kind normal_day |
// anomalous_day). `verified` records whether the annotation was confirmed
// on site.

struct LabelFile {
    std::vector<LabeledEvent> events;
    std::vector<DayTag> days;
};

void write_labels_csv(const std::filesystem::path& path, const LabelFile& labels);
LabelFile read_labels_csv(const std::filesystem::path& path, const std::string& source);

// ---------------------------------------------------------------------------
// Run configuration: one JSON file drives every command, and every field is
// echoed into the manifest of each run directory.

struct TraceEntry {
    std::string source;
    std::string trace_path;
    std::string label_path;
};

struct RunConfig {
    std::vector<TraceEntry> traces;
    std::vector<std::string> sensors;      // window channels, e.g. {"T8"}
    DetectorKind detector = DetectorKind::rba;
    std::string training_source;
    double validation_fraction = 0.1;
    std::size_t window_length = 60;        // minutes
    std::size_t train_stride = 1;          // minutes
    std::size_t detect_stride = 15;        // minutes
    std::size_t trials = 20;               // tuner budget
    std::uint64_t seed = 0;
    ParamAssignment params;                // detector overrides for train
};

RunConfig read_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const std::string& text);
// Canonical JSON echo (sorted keys, shortest float form): the text that is
// hashed, embedded in manifests, and accepted back by run_config_from_json.
std::string run_config_json(const RunConfig& config);
// FNV-1a 64-bit hash of the canonical echo, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// ---------------------------------------------------------------------------
// Model checkpoints: a self-describing versioned binary file (magic,
// version, detector kind, length-prefixed JSON header, raw IEEE-754 blob).
// Doubles that define scoring behavior travel in the blob, never through
// text. docs/checkpoint-format.md specifies the byte layout.

struct SavedModel {
    DetectorKind kind = DetectorKind::rba;
    std::vector<std::string> sensors;      // channels the model expects
    std::size_t window_length = 0;
    std::uint64_t fit_seed = 0;
    ParamAssignment params;                // parameters the model was fit with
    Scaler scaler;                         // empty for the rule-based detector

    // Reference-set kinds (lof, iforest, envelope) store the scaled training
    // matrix and refit deterministically on load; the one-class SVM stores
    // its support vectors here instead, with the dual solution below.
    std::size_t rows = 0, cols = 0;
    std::vector<double> training;          // row-major rows x cols
    std::vector<double> coefficients;      // ocsvm dual coefficients, one per row
    double rho = 0.0;                      // ocsvm offset

    // The recurrent autoencoder stores its trained weights and threshold.
    std::vector<double> ae_parameters;
    double alpha = 0.0;
    bool alpha_set = false;
    bool alpha_degenerate = false;
};

void write_model(const std::filesystem::path& path, const SavedModel& model);
// Throws std::runtime_error on a bad magic, version, or truncated file.
SavedModel read_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Parameter translation: named assignments (as sampled by the tuner or given
// in RunConfig) to each detector's config struct. Unknown names throw
// std::invalid_argument.

RbaConfig rba_params(const ParamAssignment& params);
LofParams lof_params(const ParamAssignment& params);
IforestParams iforest_params(const ParamAssignment& params, std::uint64_t seed);
McdParams mcd_params(const ParamAssignment& params, std::uint64_t seed);
OcsvmParams ocsvm_params(const ParamAssignment& params);
AeConfig ae_config(const ParamAssignment& params, std::size_t sensors,
                   std::size_t window_length, std::uint64_t seed);

// ---------------------------------------------------------------------------
// A scoring-ready detector behind one surface: raw (unscaled) windows in,
// scores and verdicts out. The rule-based detector is trace-level and lives
// outside this wrapper (see rba_window_verdicts).

class FittedDetector {
public:
    // Fits `kind` on the training windows (scaled internally with `scaler`);
    // validation windows are used by the autoencoder's early stopping and
    // ignored by the others.
    static FittedDetector fit(DetectorKind kind, const ParamAssignment& params,
                              const std::vector<Window>& training,
                              const std::vector<Window>& validation,
                              const Scaler& scaler, std::uint64_t seed);

    // Higher score = more anomalous for every kind (the one-class margin is
    // negated so the rule holds).
    std::vector<double> scores(const std::vector<Window>& windows) const;
    std::vector<Verdict> classify(const std::vector<Window>& windows) const;

    DetectorKind kind() const { return kind_; }
    const Scaler& scaler() const { return scaler_; }
    // The autoencoder inside; throws std::logic_error for other kinds.
    AeModel& autoencoder();
    const AeModel& autoencoder() const;

    SavedModel save() const;
    static FittedDetector load(const SavedModel& model);

private:
    FittedDetector() = default;
    std::vector<std::vector<double>> scale_flatten(const std::vector<Window>& windows) const;

    DetectorKind kind_ = DetectorKind::rba;
    ParamAssignment params_;
    Scaler scaler_;
    std::vector<std::string> sensors_;
    std::size_t window_length_ = 0;
    std::uint64_t fit_seed_ = 0;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> training_; // scaled fit matrix, kept for checkpoints

    // Exactly one is engaged, matching kind_.
    std::optional<LofModel> lof_;
    std::optional<ForestModel> forest_;
    std::optional<McdModel> mcd_;
    std::optional<OcsvmModel> ocsvm_;
    std::optional<AeModel> ae_;
};

// Trace-level rule-based scoring mapped onto windows: a window is anomalous
// iff it overlaps a detected run by at least one minute; the score is the
// overlap in minutes. Runs are detected once over the whole trace per
// sensor, so day boundaries never truncate them.
std::vector<Verdict> rba_window_verdicts(const SensorTrace& trace,
                                         const std::vector<std::string>& sensors,
                                         const RbaConfig& config,
                                         const std::vector<Window>& windows,
                                         std::vector<double>* scores = nullptr);

// ---------------------------------------------------------------------------
// Command entry points. Each writes its outputs plus a deterministic
// manifest.json (command, config echo, config hash, seed, inputs, outputs —
// no timestamps) under out_dir, using atomic file replacement, and returns
// the text meant for stdout. Relative data paths are resolved against the
// current working directory; the CLI resolves them against the config file's
// directory before calling in.

std::string run_synth(const RunConfig& config, const std::filesystem::path& out_dir);
std::string run_split(const RunConfig& config, const std::filesystem::path& out_dir);
std::string run_train(const RunConfig& config, const std::filesystem::path& out_dir);
std::string run_tune(const RunConfig& config, const std::filesystem::path& model_path,
                     const std::filesystem::path& out_dir);
std::string run_detect(const RunConfig& config, const std::filesystem::path& model_path,
                       const std::filesystem::path& out_dir);
std::string run_eval(const RunConfig& config, const std::filesystem::path& verdicts_path,
                     const std::filesystem::path& out_dir);
// Render a one-row report directly from externally supplied counts.
std::string run_eval_counts(const ConfusionCounts& counts, const std::string& detector,
                            const std::string& dataset,
                            const std::filesystem::path& out_dir);
std::string run_report(const std::vector<std::filesystem::path>& eval_files,
                       const std::filesystem::path& out_dir);

// Reads the config echo back out of a manifest.json, so any command can be
// re-run bit-identically from the record it left behind.
RunConfig config_from_manifest(const std::filesystem::path& manifest_path);

} // namespace hive
