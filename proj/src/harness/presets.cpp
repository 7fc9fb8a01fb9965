#include "diloco/harness/presets.hpp"

#include <array>
#include <string>
#include <utility>

#include "diloco/error.hpp"

namespace diloco::harness {

namespace {

// Heterogeneous quadratic: per-shard optima and per-shard curvature, so local
// steps drift away from the averaged objective's optimum.
#define HETEROGENEOUS_QUADRATIC_BASE(steps) \
  "base:\n"                          \
  "  method: standard\n"             \
  "  replicas: 2\n"                  \
  "  H: 30\n"                        \
  "  steps: " steps "\n"              \
  "  delay: 1\n"                     \
  "  objective: {kind: quadratic, dim: 64, heterogeneity: 1, noise: 0.1, condition: 100, " \
  "curvature_spread: 0.5}\n"         \
  "  inner: {lr: 0.01}\n"            \
  "  outer: {lr: 0.4, momentum: 0.9}\n"

// One tanh hidden layer, d = 512 (input 14, hidden 32).
#define MLP_BASE                  \
  "base:\n"                       \
  "  method: standard\n"          \
  "  replicas: 2\n"               \
  "  H: 30\n"                     \
  "  steps: 900\n"                \
  "  delay: 1\n"                  \
  "  objective: {kind: mlp-regression, dim: 512, input_dim: 14, heterogeneity: 0.5, noise: 0.1}\n" \
  "  inner: {lr: 0.01}\n"         \
  "  outer: {lr: 0.4, momentum: 0.9}\n"

constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kPresets{{
    {"heterogeneous_quadratic",
     "name: heterogeneous_quadratic\n"
     "kind: training\n"
     "seed: 1\n"
     "repetitions: 5\n" HETEROGENEOUS_QUADRATIC_BASE("900")
     "variants:\n"
     "  - {name: data-parallel, method: data-parallel}\n"
     "  - {name: standard, method: standard}\n"
     "  - {name: eager-delayed, method: eager-delayed}\n"
     "  - {name: naive-delayed, method: naive-delayed}\n"
     "  - {name: naive-delayed-lr0.1, method: naive-delayed, outer: {lr: 0.1}}\n"},
    {"stale_vs_eager",
     "name: stale_vs_eager\n"
     "kind: training\n"
     "seed: 1\n"
     "repetitions: 5\n" HETEROGENEOUS_QUADRATIC_BASE("3000")
     "variants:\n"
     "  - {name: standard, method: standard}\n"
     "  - {name: eager-delayed, method: eager-delayed}\n"
     "  - {name: naive-delayed, method: naive-delayed}\n"
     "  - {name: naive-delayed-lr0.1, method: naive-delayed, outer: {lr: 0.1}}\n"
     "sweep:\n"
     "  H: [5, 30, 100, 250, 500]\n"},
    {"compression",
     "name: compression\n"
     "kind: training\n"
     "seed: 1\n"
     "repetitions: 5\n" HETEROGENEOUS_QUADRATIC_BASE("900")
     "variants:\n"
     "  - {name: standard, method: standard}\n"
     "  - {name: eager-delayed, method: eager-delayed}\n"
     "sweep:\n"
     "  quant: [fp32, bf16, fp8-e4m3, fp4-e2m1]\n"},
    {"com_overlap",
     "name: com_overlap\n"
     "kind: training\n"
     "seed: 1\n"
     "repetitions: 3\n" MLP_BASE
     "variants:\n"
     "  - {name: standard, method: standard}\n"
     "  - {name: naive-delayed, method: naive-delayed}\n"
     "  - {name: eager-delayed, method: eager-delayed}\n"
     "sweep:\n"
     "  delay: [1, 2]\n"},
    {"vanilla",
     "name: vanilla\n"
     "kind: training\n"
     "seed: 1\n"
     "repetitions: 3\n" MLP_BASE
     "variants:\n"
     "  - {name: data-parallel, method: data-parallel}\n"
     "  - {name: standard, method: standard}\n"
     "  - {name: streaming, method: standard, fragments: 4}\n"
     "  - {name: eager-delayed, method: eager-delayed}\n"
     "  - {name: streaming-eager, method: eager-delayed, fragments: 4}\n"},
    {"bandwidth_sweep",
     "name: bandwidth_sweep\n"
     "kind: netsim\n"
     "netsim:\n"
     "  models: [1B, 10B, 100B]\n"
     "  strategies:\n"
     "    - {name: data-parallel, kind: data-parallel}\n"
     "    - {name: no-overlap, kind: no-overlap}\n"
     "    - {name: inner-overlap, kind: inner-overlap, overlap_steps: 1}\n"
     "    - {name: outer-overlap, kind: outer-overlap, delay_rounds: 1}\n"
     "  H: [100]\n"
     "  formats: [fp32]\n"
     "  replicas: 2\n"
     "  bandwidth: {min: 0.1, max: 1000, points: 41}\n"
     "  cu_targets: [0.5, 0.8, 0.95]\n"},
    {"simulation_table",
     "name: simulation_table\n"
     "kind: netsim\n"
     "netsim:\n"
     "  models: [1B, 10B, 100B]\n"
     "  strategies:\n"
     "    - {name: data-parallel, kind: data-parallel}\n"
     "    - {name: no-overlap, kind: no-overlap}\n"
     "    - {name: inner-overlap, kind: inner-overlap, overlap_steps: 1}\n"
     "    - {name: outer-overlap-k1, kind: outer-overlap, delay_rounds: 1}\n"
     "    - {name: outer-overlap-k2, kind: outer-overlap, delay_rounds: 2}\n"
     "  H: [30, 100]\n"
     "  formats: [fp32, fp4-e2m1]\n"
     "  replicas: 2\n"
     "  bandwidth: {min: 0.1, max: 1000, points: 13}\n"
     "  cu_targets: [0.5, 0.8, 0.9, 0.95, 0.99]\n"},
}};

#undef HETEROGENEOUS_QUADRATIC_BASE
#undef MLP_BASE

}  // namespace

std::vector<std::string_view> preset_names() {
  std::vector<std::string_view> out;
  for (const auto& [name, text] : kPresets) out.push_back(name);
  return out;
}

std::string_view preset_text(std::string_view name) {
  for (const auto& [n, text] : kPresets) {
    if (n == name) return text;
  }
  std::string known;
  for (const auto& [n, text] : kPresets) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

ExperimentConfig load_preset(std::string_view name) { return parse_config(preset_text(name)); }

}  // namespace diloco::harness
