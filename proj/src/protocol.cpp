#include "diloco/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "diloco/error.hpp"

namespace diloco {

namespace {

ParamVector scaled(const ParamVector& x, double s) {
  ParamVector out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x[i];
  return out;
}

double eval_loss(const ShardSet& shards, const ParamVector& theta) {
  double acc = 0.0;
  for (std::size_t m = 0; m < shards.size(); ++m) acc += loss(shards.spec(), theta, shards.probe(m));
  const double value = acc / static_cast<double>(shards.size());
  if (!std::isfinite(value)) throw NumericError("evaluation loss is not finite");
  return value;
}

std::vector<ParamVector> collect_params(const std::vector<ReplicaState>& replicas) {
  std::vector<ParamVector> out;
  out.reserve(replicas.size());
  for (const auto& r : replicas) out.push_back(r.params);
  return out;
}

double max_divergence(const std::vector<ParamVector>& params, const ParamVector& mean) {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, l2_norm(linear_combine(1.0, p, -1.0, mean)));
  return worst;
}

// Per-fragment coordinator state: round counter and reduces in transit.
struct FragmentChannel {
  std::int64_t round = 0;
  std::deque<InFlightReduce> in_flight;
};

class DilocoRun {
 public:
  DilocoRun(const TrainConfig& cfg, const ShardSet& shards)
      : cfg_(cfg), shards_(shards), frags_(cfg.fragment_spec()), channels_(frags_.count()) {
    const ParamVector init = shards_.initial_params();
    for (std::size_t m = 0; m < cfg_.replicas; ++m) {
      ReplicaState r;
      r.id = m;
      r.params = init;
      r.anchor = init;
      r.inner = AdamState::init(init.size(), cfg_.inner);
      for (std::size_t f = 0; f < frags_.count(); ++f) {
        r.outer.push_back(NesterovState::init(frags_.ranges[f].size(), cfg_.outer));
      }
      r.stash.resize(frags_.count());
      replicas_.push_back(std::move(r));
    }
  }

  TrainingTrace run() {
    std::int64_t t = 1;
    try {
      for (; t <= cfg_.steps; ++t) {
        inner_step(t);
        bool synced = false;
        for (std::size_t f = 0; f < frags_.count(); ++f) {
          if (fragment_sync_due(t, f, cfg_.H, frags_)) {
            sync_fragment(f, t);
            synced = true;
          }
        }
        if (cfg_.resync_period > 0 && t % (cfg_.resync_period * cfg_.H) == 0) {
          replicas_ = resync_replicas(std::move(replicas_));
        }
        const auto params = collect_params(replicas_);
        const ParamVector mean = average_vectors(params);
        if (synced) trace_.replica_divergence.push_back(max_divergence(params, mean));
        trace_.eval_loss.push_back(eval_loss(shards_, mean));
      }
    } catch (const NumericError&) {
      trace_.diverged = true;
      trace_.diverged_at = t;
    }
    trace_.final_params = collect_params(replicas_);
    return std::move(trace_);
  }

 private:
  void inner_step(std::int64_t t) {
    for (auto& r : replicas_) {
      const Batch batch = shards_.batch(r.id, static_cast<std::uint64_t>(t));
      auto [value, grad] = loss_and_grad(shards_.spec(), r.params, batch);
      auto [state, next] = adam_step(std::move(r.inner), r.params, grad);
      r.inner = std::move(state);
      r.params = std::move(next);
    }
  }

  void apply(ReplicaState& r, std::size_t f, const ParamVector& delta, std::int64_t round,
             std::int64_t t) {
    const ParamVector anchor = slice_fragment(r.anchor, frags_, f);
    auto [state, next] = nesterov_outer_step(std::move(r.outer[f]), anchor, delta);
    r.outer[f] = std::move(state);
    write_fragment(r.params, frags_, f, next);
    if (cfg_.record_applied) trace_.applied.push_back({r.id, f, round, t, delta});
  }

  void sync_fragment(std::size_t f, std::int64_t t) {
    auto& channel = channels_[f];
    const std::int64_t round = ++channel.round;
    const std::size_t m_count = replicas_.size();
    const std::size_t frag_dim = frags_.ranges[f].size();

    std::vector<ParamVector> local;
    std::vector<ParamVector> sent;
    local.reserve(m_count);
    sent.reserve(m_count);
    for (const auto& r : replicas_) {
      local.push_back(compute_outer_gradient(slice_fragment(r.anchor, frags_, f),
                                             slice_fragment(r.params, frags_, f)));
      sent.push_back(quantize_dequantize(local.back(), cfg_.quant));
    }
    ParamVector average = average_vectors(sent);
    trace_.reduce_count += 1;
    trace_.payload_bits += payload_bits(frag_dim, cfg_.quant);
    trace_.payload_bytes += reduce_payload_bytes(frag_dim, cfg_.quant);
    trace_.outer_grad_norms.push_back(l2_norm(average));

    if (cfg_.method == Method::Standard) {
      for (auto& r : replicas_) apply(r, f, average, round, t);
    } else {
      const std::int64_t k = cfg_.effective_delay();
      channel.in_flight.push_back({std::move(average), round, round + k});
      std::optional<InFlightReduce> ready;
      if (channel.in_flight.front().ready(round)) {
        ready = std::move(channel.in_flight.front());
        channel.in_flight.pop_front();
        trace_.consumed.push_back({f, round, ready->sent_round});
      }
      for (std::size_t m = 0; m < m_count; ++m) {
        auto& r = replicas_[m];
        if (cfg_.method == Method::NaiveDelayed) {
          if (ready) apply(r, f, ready->payload, round, t);
          continue;
        }
        auto& stash = r.stash[f];
        ParamVector combined;
        if (ready) {
          combined = eager_combine(local[m], stash.front(), ready->payload, m_count);
          stash.pop_front();
        } else {
          combined = scaled(local[m], 1.0 / static_cast<double>(m_count));
        }
        stash.push_back(sent[m]);
        apply(r, f, combined, round, t);
      }
    }

    for (auto& r : replicas_) {
      write_fragment(r.anchor, frags_, f, slice_fragment(r.params, frags_, f));
      if (cfg_.reset_inner_state) r.inner.reset();
    }
  }

  const TrainConfig& cfg_;
  const ShardSet& shards_;
  FragmentSpec frags_;
  std::vector<FragmentChannel> channels_;
  std::vector<ReplicaState> replicas_;
  TrainingTrace trace_;
};

TrainingTrace run_data_parallel(const TrainConfig& cfg, const ShardSet& shards) {
  TrainingTrace trace;
  ParamVector params = shards.initial_params();
  AdamState adam = AdamState::init(params.size(), cfg.inner);
  std::int64_t t = 1;
  try {
    for (; t <= cfg.steps; ++t) {
      std::vector<ParamVector> sent;
      sent.reserve(shards.size());
      for (std::size_t m = 0; m < shards.size(); ++m) {
        auto [value, grad] = loss_and_grad(shards.spec(), params,
                                           shards.batch(m, static_cast<std::uint64_t>(t)));
        sent.push_back(quantize_dequantize(grad, cfg.quant));
      }
      const ParamVector grad = average_vectors(sent);
      trace.reduce_count += 1;
      trace.payload_bits += payload_bits(params.size(), cfg.quant);
      trace.payload_bytes += reduce_payload_bytes(params.size(), cfg.quant);
      auto [state, next] = adam_step(std::move(adam), params, grad);
      adam = std::move(state);
      params = std::move(next);
      trace.eval_loss.push_back(eval_loss(shards, params));
    }
  } catch (const NumericError&) {
    trace.diverged = true;
    trace.diverged_at = t;
  }
  trace.final_params.assign(cfg.replicas, params);
  return trace;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::DataParallel: return "data-parallel";
    case Method::Standard: return "standard";
    case Method::NaiveDelayed: return "naive-delayed";
    case Method::EagerDelayed: return "eager-delayed";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "data-parallel" || name == "dp") return Method::DataParallel;
  if (name == "standard" || name == "diloco") return Method::Standard;
  if (name == "naive-delayed" || name == "naive") return Method::NaiveDelayed;
  if (name == "eager-delayed" || name == "eager") return Method::EagerDelayed;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_delayed(Method method) noexcept {
  return method == Method::NaiveDelayed || method == Method::EagerDelayed;
}

void TrainConfig::validate() const {
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (H < 1) throw ConfigError("H must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (is_delayed(method) && delay < 1) throw ConfigError("delay must be >= 1 for delayed methods");
  if (resync_period < 0) throw ConfigError("resync_period must be >= 0");
  if (!(inner.lr >= 0.0) || !(outer.lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (!(inner.beta1 >= 0.0 && inner.beta1 < 1.0) || !(inner.beta2 >= 0.0 && inner.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(outer.momentum >= 0.0 && outer.momentum < 1.0)) {
    throw ConfigError("outer momentum must lie in [0, 1)");
  }
  objective.validate();
  if (fragments < 1 || fragments > objective.dim) {
    throw ConfigError("fragments must lie in [1, objective.dim]");
  }
  if (reset_inner_state && fragments > 1) {
    throw ConfigError("reset_inner_state is only supported with a single fragment");
  }
}

std::int64_t TrainConfig::effective_delay() const noexcept { return is_delayed(method) ? delay : 0; }

FragmentSpec TrainConfig::fragment_spec() const {
  if (fragments == 1) return FragmentSpec::whole(objective.dim);
  return FragmentSpec::staggered(objective.dim, fragments, H);
}

double TrainingTrace::final_eval_loss() const {
  if (diverged || eval_loss.empty()) return std::numeric_limits<double>::quiet_NaN();
  return eval_loss.back();
}

double TrainingTrace::final_divergence() const {
  if (final_params.empty()) return 0.0;
  const ParamVector mean = average_vectors(final_params);
  return max_divergence(final_params, mean);
}

ParamVector compute_outer_gradient(const ParamVector& anchor, const ParamVector& theta_end) {
  if (anchor.size() != theta_end.size()) {
    throw ConfigError("compute_outer_gradient: dimension mismatch");
  }
  ParamVector delta = anchor;
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = anchor[i] - theta_end[i];
  return delta;
}

ParamVector eager_combine(const ParamVector& local_now, const ParamVector& local_stale,
                          const ParamVector& avg_stale, std::size_t replicas) {
  if (replicas == 0) throw ConfigError("eager_combine: replica count must be >= 1");
  if (local_now.size() != local_stale.size() || local_now.size() != avg_stale.size()) {
    throw ConfigError("eager_combine: dimension mismatch");
  }
  // With one replica the stale average is the stale local delta, so the
  // combination is the fresh delta itself.
  if (replicas == 1) return local_now;
  const double inv = 1.0 / static_cast<double>(replicas);
  ParamVector out = avg_stale;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv * (local_now[i] - local_stale[i]) + avg_stale[i];
  }
  return out;
}

bool fragment_sync_due(std::int64_t step, std::size_t fragment, std::int64_t H,
                       const FragmentSpec& spec) {
  if (fragment >= spec.count()) throw ConfigError("fragment_sync_due: fragment out of range");
  const std::int64_t offset = spec.offsets[fragment];
  return step > offset && (step - offset) % H == 0;
}

std::vector<ReplicaState> resync_replicas(std::vector<ReplicaState> replicas) {
  if (replicas.empty()) throw ConfigError("resync_replicas: no replicas");
  const ParamVector mean = average_vectors(collect_params(replicas));
  for (auto& r : replicas) {
    r.params = mean;
    r.anchor = mean;
  }
  return replicas;
}

std::uint64_t reduce_payload_bytes(std::size_t dim, QuantFormat fmt) {
  return (payload_bits(dim, fmt) + 7) / 8;
}

TrainingTrace run_training(const TrainConfig& cfg) {
  cfg.validate();
  const ShardSet shards = make_shards(cfg.objective, cfg.replicas, cfg.seed);
  if (cfg.method == Method::DataParallel) return run_data_parallel(cfg, shards);
  DilocoRun run(cfg, shards);
  return run.run();
}

}  // namespace diloco
