#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "diloco/objectives.hpp"
#include "diloco/optim.hpp"
#include "diloco/quant.hpp"
#include "diloco/tensorcore.hpp"

namespace diloco {

enum class Method {
  DataParallel,   // gradients averaged every step, one shared Adam
  Standard,       // outer step applied with the reduce of the same round
  NaiveDelayed,   // outer step applied with the reduce from k rounds earlier
  EagerDelayed,   // delayed reduce with the own stale term swapped for the fresh one
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
bool is_delayed(Method method) noexcept;

struct TrainConfig {
  Method method = Method::Standard;
  std::size_t replicas = 2;
  std::int64_t H = 30;       // inner steps per outer round
  std::int64_t steps = 900;  // inner steps per replica (T)
  std::int64_t delay = 1;    // k: rounds a reduce is in flight (delayed methods)
  ObjectiveSpec objective;
  AdamConfig inner;
  NesterovConfig outer;
  std::size_t fragments = 1;  // 1 = whole model; >1 = staggered streaming fragments
  QuantFormat quant = QuantFormat::Fp32;
  std::int64_t resync_period = 0;  // rounds between replica averaging; 0 = off
  bool reset_inner_state = false;
  std::uint64_t seed = 0;
  // Keep every applied outer delta in the trace (memory grows with rounds * d).
  bool record_applied = false;

  void validate() const;
  // Rounds between enqueue and consumption; 0 for synchronous methods.
  std::int64_t effective_delay() const noexcept;
  FragmentSpec fragment_spec() const;
};

// An averaged outer gradient in transit. Readable once the fragment's round
// counter reaches `ready_round`.
struct InFlightReduce {
  ParamVector payload;
  std::int64_t sent_round = 0;
  std::int64_t ready_round = 0;

  bool ready(std::int64_t round) const noexcept { return round >= ready_round; }
};

struct ReplicaState {
  std::size_t id = 0;
  ParamVector params;
  // Parameters at the start of the current inner phase (sliced per fragment).
  ParamVector anchor;
  AdamState inner;
  std::vector<NesterovState> outer;              // one per fragment
  std::vector<std::deque<ParamVector>> stash;    // own past contributions, per fragment
};

struct ReduceRecord {
  std::size_t fragment = 0;
  std::int64_t consumed_round = 0;
  std::int64_t sent_round = 0;
};

struct AppliedUpdate {
  std::size_t replica = 0;
  std::size_t fragment = 0;
  std::int64_t round = 0;
  std::int64_t step = 0;
  ParamVector delta;
};

struct TrainingTrace {
  std::vector<double> eval_loss;           // one per inner step
  std::vector<double> outer_grad_norms;    // one per reduce, norm of the averaged payload
  std::vector<double> replica_divergence;  // max_m ||theta_m - mean||, one per boundary
  std::vector<ReduceRecord> consumed;
  std::vector<AppliedUpdate> applied;
  std::uint64_t reduce_count = 0;
  std::uint64_t payload_bits = 0;
  std::uint64_t payload_bytes = 0;
  std::vector<ParamVector> final_params;  // one per replica
  bool diverged = false;
  std::int64_t diverged_at = 0;

  double final_eval_loss() const;
  double final_divergence() const;
};

ParamVector compute_outer_gradient(const ParamVector& anchor, const ParamVector& theta_end);

// (1/M)(now - stale_local) + stale_avg: the fresh local outer gradient
// replaces this replica's stale share of the averaged reduce.
ParamVector eager_combine(const ParamVector& local_now, const ParamVector& local_stale,
                          const ParamVector& avg_stale, std::size_t replicas);

bool fragment_sync_due(std::int64_t step, std::size_t fragment, std::int64_t H,
                       const FragmentSpec& spec);

// Replace every replica's parameters and anchor with the replica mean.
std::vector<ReplicaState> resync_replicas(std::vector<ReplicaState> replicas);

// Bytes charged per reduce of `dim` values (bits rounded up to whole bytes).
std::uint64_t reduce_payload_bytes(std::size_t dim, QuantFormat fmt);

TrainingTrace run_training(const TrainConfig& cfg);

}  // namespace diloco
