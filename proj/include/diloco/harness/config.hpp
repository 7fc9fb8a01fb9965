#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "diloco/netsim.hpp"
#include "diloco/protocol.hpp"

namespace diloco::harness {

enum class ExperimentKind { Training, Netsim };

std::string_view to_string(ExperimentKind kind);

struct Variant {
  std::string name;
  TrainConfig config;  // seed fields are filled per repetition
};

// Grid applied to every variant. An unset axis keeps the variant's value.
struct SweepAxes {
  std::vector<std::int64_t> H;
  std::vector<std::int64_t> delay;
  std::vector<std::size_t> replicas;
  std::vector<std::size_t> fragments;
  std::vector<QuantFormat> quant;
};

struct NetsimStrategy {
  std::string name;
  netsim::OverlapStrategy strategy;
};

struct NetsimSweep {
  std::vector<netsim::ModelSpec> models;
  std::vector<NetsimStrategy> strategies;
  std::vector<std::int64_t> H{100};
  std::vector<QuantFormat> formats{QuantFormat::Fp32};
  std::int64_t replicas = 2;
  double bandwidth_min = 0.1;  // Gbit/s
  double bandwidth_max = 1000.0;
  std::size_t bandwidth_points = 41;
  std::vector<double> cu_targets;  // rows of min_bandwidth.csv
  std::int64_t total_steps = 0;    // 0 picks netsim::default_total_steps
};

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::Training;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;  // seeds seed .. seed + repetitions - 1
  std::vector<Variant> variants;
  SweepAxes sweep;
  NetsimSweep netsim;

  void validate() const;
  std::vector<std::uint64_t> seeds() const;
};

// Parses a config document. A manifest written by run_experiment is also
// accepted; its embedded `config` is used after checking `config_hash`.
// Unknown keys and type mismatches throw ConfigError naming the key path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved canonical document; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);
// FNV-1a 64 of emit_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace diloco::harness
