#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "diloco/quant.hpp"
#include "diloco/tensorcore.hpp"

namespace diloco::netsim {

struct ModelSpec {
  std::string name;
  std::uint64_t params = 0;
  std::int64_t layers = 0;
  double step_time = 0.0;  // seconds of pure compute per inner step

  void validate() const;
  // "1B", "10B" or "100B".
  static ModelSpec preset(std::string_view name);
};

enum class OverlapKind {
  DataParallel,      // full-model reduce after every step, nothing hidden
  NoOverlap,         // DiLoCo / streaming DiLoCo, blocking reduce per sync
  InnerStepOverlap,  // reduce hidden behind the next `overlap_steps` inner steps
  OuterStepOverlap,  // reduce hidden behind the next `delay_rounds` inner phases
};

std::string_view to_string(OverlapKind kind);
OverlapKind parse_overlap_kind(std::string_view name);

struct OverlapStrategy {
  OverlapKind kind = OverlapKind::NoOverlap;
  std::int64_t H = 100;
  std::int64_t overlap_steps = 1;
  std::int64_t delay_rounds = 1;
  // Layers per streaming fragment; 0 syncs the whole model at once.
  std::int64_t layers_per_fragment = 3;
  QuantFormat format = QuantFormat::Fp32;

  void validate() const;
  // Compute time available to hide one reduce, in inner steps.
  std::int64_t window_steps() const noexcept;
};

struct CUReport {
  double compute_seconds = 0.0;
  double comm_seconds = 0.0;
  double stall_seconds = 0.0;
  double wall_seconds = 0.0;
  double utilization = 1.0;
};

// Parameter ranges synchronized together, with staggered sync offsets.
// Data-parallel and whole-model strategies yield a single fragment.
FragmentSpec event_fragments(const ModelSpec& model, const OverlapStrategy& strategy);

// Seconds to all-reduce one event's payload (the largest fragment) over a
// ring: payload_bits * 2(M-1)/M / (bandwidth * 1e9).
double comm_seconds(const ModelSpec& model, const OverlapStrategy& strategy, std::int64_t replicas,
                    double bandwidth_gbps);

// Steady-state schedule over `total_steps` inner steps: each event stalls
// compute by max(0, comm - window).
CUReport simulate(const ModelSpec& model, const OverlapStrategy& strategy, std::int64_t replicas,
                  double bandwidth_gbps, std::int64_t total_steps);

std::int64_t default_total_steps(const OverlapStrategy& strategy);

// Least bandwidth (Gbit/s, 1e-3 relative) at which simulate() reaches
// `target_cu`. Infinite when the target is unreachable (target 1 with no
// overlap window).
double min_bandwidth_for_cu(const ModelSpec& model, const OverlapStrategy& strategy,
                            std::int64_t replicas, double target_cu, std::int64_t total_steps = 0);

// Log-spaced grid from `lo` to `hi` inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

}  // namespace diloco::netsim
