#include "diloco/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diloco/error.hpp"
#include "diloco/protocol.hpp"

namespace diloco::netsim {

namespace {

double allreduce_factor(std::int64_t replicas) {
  return 2.0 * static_cast<double>(replicas - 1) / static_cast<double>(replicas);
}

double event_seconds(std::size_t params, QuantFormat fmt, std::int64_t replicas,
                     double bandwidth_gbps) {
  if (std::isinf(bandwidth_gbps)) return 0.0;
  const double bits = static_cast<double>(payload_bits(params, fmt)) * allreduce_factor(replicas);
  return bits / (bandwidth_gbps * 1e9);
}

std::int64_t syncs_up_to(std::int64_t steps, std::int64_t offset, std::int64_t period) {
  return steps > offset ? (steps - offset) / period : 0;
}

}  // namespace

void ModelSpec::validate() const {
  if (params == 0 || layers <= 0 || !(step_time > 0.0)) {
    throw ConfigError("model spec: params, layers and step_time must be positive");
  }
}

ModelSpec ModelSpec::preset(std::string_view name) {
  if (name == "1B") return {"1B", 1'000'000'000ULL, 24, 0.1};
  if (name == "10B") return {"10B", 10'000'000'000ULL, 48, 0.8};
  if (name == "100B") return {"100B", 100'000'000'000ULL, 108, 4.9};
  throw ConfigError("unknown model preset '" + std::string(name) + "'");
}

std::string_view to_string(OverlapKind kind) {
  switch (kind) {
    case OverlapKind::DataParallel: return "data-parallel";
    case OverlapKind::NoOverlap: return "no-overlap";
    case OverlapKind::InnerStepOverlap: return "inner-overlap";
    case OverlapKind::OuterStepOverlap: return "outer-overlap";
  }
  return "unknown";
}

OverlapKind parse_overlap_kind(std::string_view name) {
  if (name == "data-parallel" || name == "dp") return OverlapKind::DataParallel;
  if (name == "no-overlap") return OverlapKind::NoOverlap;
  if (name == "inner-overlap") return OverlapKind::InnerStepOverlap;
  if (name == "outer-overlap") return OverlapKind::OuterStepOverlap;
  throw ConfigError("unknown overlap strategy '" + std::string(name) + "'");
}

void OverlapStrategy::validate() const {
  if (H < 1) throw ConfigError("strategy: H must be >= 1");
  if (overlap_steps < 1) throw ConfigError("strategy: overlap_steps must be >= 1");
  if (delay_rounds < 1) throw ConfigError("strategy: delay_rounds must be >= 1");
  if (layers_per_fragment < 0) throw ConfigError("strategy: layers_per_fragment must be >= 0");
}

std::int64_t OverlapStrategy::window_steps() const noexcept {
  switch (kind) {
    case OverlapKind::DataParallel:
    case OverlapKind::NoOverlap: return 0;
    case OverlapKind::InnerStepOverlap: return overlap_steps;
    case OverlapKind::OuterStepOverlap: return delay_rounds * H;
  }
  return 0;
}

FragmentSpec event_fragments(const ModelSpec& model, const OverlapStrategy& strategy) {
  model.validate();
  strategy.validate();
  const std::size_t total = static_cast<std::size_t>(model.params);
  if (strategy.kind == OverlapKind::DataParallel || strategy.layers_per_fragment == 0 ||
      strategy.layers_per_fragment >= model.layers) {
    return FragmentSpec::whole(total);
  }
  const auto layers = static_cast<std::size_t>(model.layers);
  const auto per_fragment = static_cast<std::size_t>(strategy.layers_per_fragment);
  const std::size_t fragments = (layers + per_fragment - 1) / per_fragment;
  const std::size_t base = total / layers;
  const std::size_t extra = total % layers;
  const std::int64_t stride = strategy.H / static_cast<std::int64_t>(fragments);

  FragmentSpec spec;
  std::size_t begin = 0;
  for (std::size_t f = 0; f < fragments; ++f) {
    std::size_t size = 0;
    for (std::size_t l = f * per_fragment; l < std::min(layers, (f + 1) * per_fragment); ++l) {
      size += base + (l < extra ? 1 : 0);
    }
    spec.ranges.push_back({begin, begin + size});
    spec.offsets.push_back(static_cast<std::int64_t>(f) * stride);
    begin += size;
  }
  return spec;
}

double comm_seconds(const ModelSpec& model, const OverlapStrategy& strategy, std::int64_t replicas,
                    double bandwidth_gbps) {
  if (!(bandwidth_gbps > 0.0)) throw ConfigError("comm_seconds: bandwidth must be positive");
  if (replicas < 1) throw ConfigError("comm_seconds: replicas must be >= 1");
  const FragmentSpec frags = event_fragments(model, strategy);
  std::size_t largest = 0;
  for (const auto& r : frags.ranges) largest = std::max(largest, r.size());
  return event_seconds(largest, strategy.format, replicas, bandwidth_gbps);
}

CUReport simulate(const ModelSpec& model, const OverlapStrategy& strategy, std::int64_t replicas,
                  double bandwidth_gbps, std::int64_t total_steps) {
  if (!(bandwidth_gbps > 0.0)) throw ConfigError("simulate: bandwidth must be positive");
  if (replicas < 1) throw ConfigError("simulate: replicas must be >= 1");
  const std::int64_t period = strategy.kind == OverlapKind::DataParallel ? 1 : strategy.H;
  if (total_steps < period) {
    throw ConfigError("simulate: total_steps must cover one communication period");
  }
  const FragmentSpec frags = event_fragments(model, strategy);
  const double window = static_cast<double>(strategy.window_steps()) * model.step_time;

  CUReport report;
  report.compute_seconds = static_cast<double>(total_steps) * model.step_time;
  for (std::size_t f = 0; f < frags.count(); ++f) {
    const std::int64_t events = strategy.kind == OverlapKind::DataParallel
                                    ? total_steps
                                    : syncs_up_to(total_steps, frags.offsets[f], period);
    const double per_event =
        event_seconds(frags.ranges[f].size(), strategy.format, replicas, bandwidth_gbps);
    report.comm_seconds += static_cast<double>(events) * per_event;
    report.stall_seconds += static_cast<double>(events) * std::max(0.0, per_event - window);
  }
  report.wall_seconds = report.compute_seconds + report.stall_seconds;
  report.utilization = report.compute_seconds / report.wall_seconds;
  return report;
}

std::int64_t default_total_steps(const OverlapStrategy& strategy) {
  return strategy.kind == OverlapKind::DataParallel ? 100 : 100 * strategy.H;
}

double min_bandwidth_for_cu(const ModelSpec& model, const OverlapStrategy& strategy,
                            std::int64_t replicas, double target_cu, std::int64_t total_steps) {
  if (!(target_cu > 0.0 && target_cu <= 1.0)) {
    throw ConfigError("min_bandwidth_for_cu: target must lie in (0, 1]");
  }
  if (total_steps <= 0) total_steps = default_total_steps(strategy);
  const auto cu = [&](double bw) {
    return simulate(model, strategy, replicas, bw, total_steps).utilization;
  };
  if (replicas == 1) return 0.0;  // nothing to communicate
  if (target_cu == 1.0 && strategy.window_steps() == 0) {
    return std::numeric_limits<double>::infinity();
  }

  double lo = 1e-9;
  double hi = 1e9;
  if (cu(lo) >= target_cu) return lo;
  while (cu(hi) < target_cu) {
    lo = hi;
    hi *= 1e3;
    if (hi > 1e30) return std::numeric_limits<double>::infinity();
  }
  while (hi / lo > 1.0 + 1e-4) {
    const double mid = std::sqrt(lo * hi);
    if (cu(mid) >= target_cu) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw ConfigError("log_grid: invalid range");
  std::vector<double> out;
  if (points == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i) {
    out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) /
                                         static_cast<double>(points - 1)));
  }
  return out;
}

}  // namespace diloco::netsim
