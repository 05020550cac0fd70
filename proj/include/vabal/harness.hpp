#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vabal/config.hpp"
#include "vabal/dataset.hpp"

namespace vabal {

/// One active-learning round's bookkeeping. The CSV schema below carries
/// everything except wall_ms (kept out of files so reruns are byte-identical).
struct RoundRecord {
  std::size_t round = 0;
  std::size_t labelled = 0;
  double accuracy = 0.0;
  double rare_ratio = 0.0;  // fraction of the labelled pool outside the most
                            // populous training class
  double mean_sel_score = 0.0;
  std::uint64_t seed = 0;
  std::string strategy;
  std::vector<std::int64_t> class_counts;  // labelled pool per class
  double wall_ms = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;
  std::vector<std::vector<std::size_t>> selections;  // queried ids per round
  std::vector<std::string> warnings;
};

std::string record_csv_header(std::size_t num_classes);
std::string record_csv_line(const RoundRecord& record);

/// Materialize the configured dataset (generate the mixture, or load the CSV
/// and apply a stratified 80/20 split).
Dataset build_dataset(const ExperimentConfig& config);

/// One seeded run of the round loop: train -> freeze -> train VAE -> estimate
/// -> score -> select -> transfer, with a final retrain for the last accuracy
/// point. When csv_path is nonempty every record is appended and flushed as
/// soon as it exists.
RunResult run_single(const ExperimentConfig& config, const Dataset& dataset,
                     std::uint64_t seed, const std::string& csv_path = "");

/// All configured seeds; writes <output_dir>/<strategy>_seed<seed>.csv.
std::vector<RunResult> run_experiment(const ExperimentConfig& config);
std::vector<RunResult> run_experiment(const ExperimentConfig& config, const Dataset& dataset);

/// Cross-product over one axis (lambda | budget | w_variant); cells share the
/// dataset and the seed list and land in <output_dir>/<axis>=<value>/.
std::vector<RunResult> sweep(const ExperimentConfig& config, const std::string& axis,
                             const std::vector<std::string>& values);

struct GroupSummary {
  std::string group;  // subdirectory relative to the report root ("." at top)
  std::string strategy;
  std::size_t num_seeds = 0;
  std::vector<std::size_t> rounds;
  std::vector<double> mean_labelled;
  std::vector<double> mean_accuracy;
  std::vector<double> std_accuracy;
  std::vector<double> mean_rare_ratio;
  std::vector<double> std_rare_ratio;
  std::vector<double> mean_sel_score;
  double avg_accuracy = 0.0;    // mean over rounds of the per-round mean
  double final_accuracy = 0.0;  // per-round mean at the last round
};

struct ReportSummary {
  std::vector<GroupSummary> groups;
};

/// Aggregate every per-round CSV under dir (recursively) into
/// dir/aggregate.csv and dir/summary.json. Mean/std are across seeds;
/// incompatible files in one group (different headers or round sets) raise
/// an error naming the offenders.
ReportSummary report(const std::string& dir);

}  // namespace vabal
