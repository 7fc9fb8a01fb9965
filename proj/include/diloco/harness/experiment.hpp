#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diloco/harness/config.hpp"
#include "diloco/harness/csv.hpp"

namespace diloco::harness {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::size_t jobs = 1;  // 0 = hardware concurrency
  std::optional<std::uint64_t> seed;
};

struct TrainingJob {
  std::string variant;
  TrainConfig config;
};

struct TrainingResult {
  std::string variant;
  TrainConfig config;
  double final_eval_loss = 0.0;  // NaN when diverged
  bool diverged = false;
  std::uint64_t total_payload_bytes = 0;
  double replica_divergence = 0.0;
};

struct NetsimPoint {
  std::string method;
  std::string model;
  std::int64_t H = 0;
  std::int64_t k = 0;
  QuantFormat format = QuantFormat::Fp32;
  double bandwidth_gbps = 0.0;
  double utilization = 0.0;
};

struct MinBandwidthPoint {
  std::string method;
  std::string model;
  std::int64_t H = 0;
  std::int64_t k = 0;
  QuantFormat format = QuantFormat::Fp32;
  double target_cu = 0.0;
  double min_bandwidth_gbps = 0.0;
};

struct NetsimResult {
  std::vector<NetsimPoint> curve;
  std::vector<MinBandwidthPoint> min_bandwidth;
};

// Variants x sweep grid x seeds, in that nesting order. Every job is
// validated before this returns.
std::vector<TrainingJob> expand_training(const ExperimentConfig& config);
// Results come back in job order regardless of `jobs`.
std::vector<TrainingResult> run_training_jobs(const std::vector<TrainingJob>& jobs,
                                              std::size_t threads);
NetsimResult run_netsim_sweep(const ExperimentConfig& config, std::size_t threads);

CsvTable training_table(const std::vector<TrainingResult>& results);
CsvTable netsim_table(const std::vector<NetsimPoint>& points);
CsvTable min_bandwidth_table(const std::vector<MinBandwidthPoint>& points);

struct ExperimentReport {
  ExperimentConfig config;  // after the seed override
  std::filesystem::path runs_csv;
  std::filesystem::path manifest;
  std::size_t rows = 0;
  std::size_t diverged = 0;
};

// Executes every run and writes runs.csv and manifest.yaml (plus
// min_bandwidth.csv for netsim sweeps with cu_targets) into out_dir.
ExperimentReport run_experiment(ExperimentConfig config, const RunOptions& options);
ExperimentReport run_experiment_file(const std::filesystem::path& path, const RunOptions& options);

}  // namespace diloco::harness
