#include "hive/clio.hpp"
#include "hive/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string manifest_path;
    std::string out_dir;
    std::string detector;
    std::vector<std::string> sensors;
    std::int64_t seed = -1;
    std::int64_t stride_min = -1;
    std::int64_t trials = -1;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* config = cmd->add_option("--config", args.config_path,
                                   "run configuration JSON file");
    cmd->add_option("--from-manifest", args.manifest_path,
                    "re-run with the config echoed into an earlier manifest")
        ->excludes(config);
    if (config_required) {
        // Either source of configuration satisfies the requirement; checked
        // after parsing.
    }
    cmd->add_option("--out-dir", args.out_dir, "directory for outputs")->required();
    cmd->add_option("--detector", args.detector, "override the configured detector");
    cmd->add_option("--sensors", args.sensors, "override the configured sensor list")
        ->delimiter(',');
    cmd->add_option("--seed", args.seed, "override the configured seed");
    cmd->add_option("--stride-min", args.stride_min,
                    "override the detection stride in minutes");
    cmd->add_option("--trials", args.trials, "override the tuning budget");
    cmd->add_option("--threads", args.threads,
                    "worker threads (0 = all cores, 1 = serial)");
}

// Loads the config (file or manifest echo), resolves data paths relative to
// the config file's directory, and applies flag overrides.
hive::RunConfig resolve_config(const CommonArgs& args, bool required) {
    hive::RunConfig config;
    if (!args.manifest_path.empty()) {
        config = hive::config_from_manifest(args.manifest_path);
    } else if (!args.config_path.empty()) {
        config = hive::read_run_config(args.config_path);
        fs::path base = fs::path(args.config_path).parent_path();
        for (auto& entry : config.traces) {
            if (fs::path(entry.trace_path).is_relative())
                entry.trace_path = (base / entry.trace_path).string();
            if (fs::path(entry.label_path).is_relative())
                entry.label_path = (base / entry.label_path).string();
        }
    } else if (required) {
        throw CLI::ValidationError("--config or --from-manifest is required");
    }
    if (!args.detector.empty())
        config.detector = hive::detector_kind_from_string(args.detector);
    if (!args.sensors.empty()) config.sensors = args.sensors;
    if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
    if (args.stride_min >= 0)
        config.detect_stride = static_cast<std::size_t>(args.stride_min);
    if (args.trials >= 0) config.trials = static_cast<std::size_t>(args.trials);
    if (args.threads >= 0) hive::par::set_threads(args.threads);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"beehive anomaly-detection toolkit"};
    app.require_subcommand(1);

    CommonArgs synth_args, split_args, train_args, tune_args, detect_args, eval_args;
    std::string tune_model, detect_model, eval_verdicts, eval_counts, eval_dataset;
    std::string report_out;
    std::vector<std::string> report_inputs;

    auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
    add_common(synth, synth_args, false);

    auto* split = app.add_subcommand("split", "plan the day-level data split");
    add_common(split, split_args, true);

    auto* train = app.add_subcommand("train", "fit a detector on the training days");
    add_common(train, train_args, true);

    auto* tune = app.add_subcommand("tune", "search detector parameters on the holdout");
    add_common(tune, tune_args, true);
    tune->add_option("--model", tune_model,
                     "trained checkpoint (required for the autoencoder threshold)");

    auto* detect = app.add_subcommand("detect", "apply a saved model over windows");
    add_common(detect, detect_args, true);
    detect->add_option("--model", detect_model, "model checkpoint to apply")
        ->required();

    auto* eval = app.add_subcommand("eval", "join verdicts with labels into a report");
    add_common(eval, eval_args, false);
    eval->add_option("--verdicts", eval_verdicts, "verdicts.csv from detect");
    eval->add_option("--counts", eval_counts,
                     "render a report directly from TP,FP,TN,FN counts");
    eval->add_option("--dataset", eval_dataset, "dataset name for --counts rows");

    auto* report = app.add_subcommand("report", "combine eval outputs into a summary");
    report->add_option("--out-dir", report_out, "directory for outputs")->required();
    report->add_option("inputs", report_inputs, "eval.json files to combine")
        ->required();

    try {
        app.parse(argc, argv);

        std::string output;
        if (*synth) {
            output = hive::run_synth(resolve_config(synth_args, false),
                                     synth_args.out_dir);
        } else if (*split) {
            output = hive::run_split(resolve_config(split_args, true),
                                     split_args.out_dir);
        } else if (*train) {
            output = hive::run_train(resolve_config(train_args, true),
                                     train_args.out_dir);
        } else if (*tune) {
            output = hive::run_tune(resolve_config(tune_args, true), tune_model,
                                    tune_args.out_dir);
        } else if (*detect) {
            output = hive::run_detect(resolve_config(detect_args, true), detect_model,
                                      detect_args.out_dir);
        } else if (*eval) {
            if (!eval_counts.empty()) {
                hive::ConfusionCounts counts;
                if (std::sscanf(eval_counts.c_str(), "%zu,%zu,%zu,%zu", &counts.tp,
                                &counts.fp, &counts.tn, &counts.fn) != 4)
                    throw CLI::ValidationError("--counts expects TP,FP,TN,FN");
                hive::RunConfig config = resolve_config(eval_args, false);
                output = hive::run_eval_counts(
                    counts, hive::to_string(config.detector),
                    eval_dataset.empty() ? "dataset" : eval_dataset,
                    eval_args.out_dir);
            } else if (!eval_verdicts.empty()) {
                output = hive::run_eval(resolve_config(eval_args, true), eval_verdicts,
                                        eval_args.out_dir);
            } else {
                throw CLI::ValidationError("eval needs --verdicts or --counts");
            }
        } else if (*report) {
            std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
            output = hive::run_report(inputs, report_out);
        }
        std::cout << output;
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::string message = e.what();
        for (char& c : message)
            if (c == '\n') c = ' ';
        std::cerr << "hivewatch: error: " << message << "\n";
        return 1;
    }
}
