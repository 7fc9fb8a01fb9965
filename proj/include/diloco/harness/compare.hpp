#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "diloco/harness/csv.hpp"

namespace diloco::harness {

struct PairedDelta {
  std::string key;  // objective/H/M/format/fragments
  std::uint64_t seed = 0;
  double baseline = 0.0;   // NaN when that run diverged
  double candidate = 0.0;
  double delta = 0.0;      // candidate - baseline
  double relative = 0.0;   // delta / baseline
};

struct CompareSummary {
  std::string baseline;
  std::string candidate;
  std::vector<PairedDelta> pairs;
  std::size_t baseline_diverged = 0;
  std::size_t candidate_diverged = 0;
  double mean_delta = 0.0;  // over pairs where neither run diverged
  double mean_relative = 0.0;
  double median_relative = 0.0;
  std::size_t candidate_worse = 0;
  std::size_t candidate_better = 0;
  std::size_t ties = 0;
  std::string verdict;  // equivalent, candidate-worse, candidate-better or mixed
};

// Rows are selected by `variant` when that column matches, otherwise by
// `method`, and paired on (objective, H, M, format, fragments, seed).
// Throws ConfigError listing the seeds of any unmatched pair.
CompareSummary compare_runs(const CsvTable& runs, std::string_view baseline,
                            std::string_view candidate);
CompareSummary compare_runs_file(const std::filesystem::path& runs_csv, std::string_view baseline,
                                 std::string_view candidate);
CsvTable summary_table(const CompareSummary& summary);

}  // namespace diloco::harness
