#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dacl/theory.hpp"
#include "dacl/train.hpp"

namespace dacl {

// Everything a run needs: training hyperparameters plus dataset wiring.
struct RunConfig {
    TrainConfig train;
    std::string data_path;
    std::optional<std::string> label_column;
    double test_fraction = 0.2;
    bool normalize = true;  // min-max per feature
};

// Strict parse: unknown keys anywhere are rejected; omitted keys take defaults.
// encoder/head widths may omit the input width, in which case it is filled in
// from the dataset at run time (width lists here start with the input dim).
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fully resolved config with every default materialized; reloading the echo
// reproduces the run.
std::string run_config_to_json(const RunConfig& cfg);

// One JSONL line with keys phase, epoch, step, loss, lr, accuracy, seconds.
std::string metrics_to_json_line(const MetricsRecord& rec);

std::string theorem_report_to_json(const TheoremReport& rep);
std::string theorem_reports_to_json(const std::vector<TheoremReport>& reps);
std::vector<TheoremReport> theorem_reports_from_file(const std::string& path);

// Per-run evaluation result, written next to the metrics stream.
struct RunResult {
    std::string method;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
};

std::string run_result_to_json(const RunResult& r);
RunResult run_result_from_file(const std::string& path);

struct ReportSummary {
    std::string csv;   // method,accuracy,seed,epochs rows
    std::string json;  // per-method median over seeds + theorem roll-up
    bool all_theorems_pass = true;
};

// Aggregates evaluation results and theorem reports. Throws ContractError on
// an empty input set, IoError when a file does not parse.
ReportSummary build_report(const std::vector<std::string>& result_paths,
                           const std::vector<std::string>& theorem_paths);

} // namespace dacl
