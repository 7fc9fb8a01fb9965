#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "diloco/tensorcore.hpp"

namespace diloco {

enum class ObjectiveKind {
  Quadratic,      // 1/B sum_b 1/2 (theta - c_b)^T A (theta - c_b), A diagonal
  Logistic,       // mean softplus(-s_b * w^T x_b), s_b in {-1, +1}
  MlpRegression,  // 1/(2B) sum_b (f(x_b; theta) - y_b)^2, one tanh hidden layer
  Linear,         // mean c_b^T theta; theta-independent gradient, used by tests
};

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Quadratic;
  std::size_t dim = 64;
  // Distance between each shard's generating parameters and the shared ones.
  double heterogeneity = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  std::size_t probe_size = 128;
  // MlpRegression: input width. The hidden width is dim / (input_dim + 2).
  std::size_t input_dim = 14;
  // Quadratic: ratio of largest to smallest curvature (1 gives A = I).
  double condition = 1.0;
  // Quadratic: shard m scales curvature i by exp(curvature_spread * z_mi),
  // z ~ N(0, 1). Nonzero values make the shard optima disagree with the
  // optimum of the averaged objective.
  double curvature_spread = 0.0;

  std::size_t hidden_dim() const noexcept { return dim / (input_dim + 2); }
  void validate() const;
};

// A batch stored row-major. What a row means depends on the objective:
//   Quadratic / Linear: rows are centers / coefficient vectors of length dim.
//   Logistic:  rows are feature vectors, targets hold labels in {-1, +1}.
//   MlpRegression: rows are inputs of length input_dim, targets hold outputs.
struct Batch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  // Quadratic only: diagonal curvature of the shard that produced the batch.
  std::vector<double> curvature;

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(inputs).subspan(r * cols, cols);
  }
};

// Per-replica data streams. Batch (shard, step) is generated from a counter
// keyed on (seed, shard, step), so any batch can be drawn in any order.
class ShardSet {
 public:
  ShardSet(ObjectiveSpec spec, std::size_t shards, std::uint64_t seed);

  const ObjectiveSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return targets_.size(); }

  Batch batch(std::size_t shard, std::uint64_t step) const;
  const Batch& probe(std::size_t shard) const { return probes_.at(shard); }

  // Generating parameters theta*_m = theta* + heterogeneity * u_m.
  const ParamVector& target(std::size_t shard) const { return targets_.at(shard); }
  const ParamVector& base_target() const noexcept { return base_target_; }
  const ParamVector& direction(std::size_t shard) const { return directions_.at(shard); }
  // Quadratic only: shard m's curvature diagonal.
  const std::vector<double>& curvature(std::size_t shard) const { return curvatures_.at(shard); }

  // Noise-free batch built from caller-supplied rows using shard m's
  // generating parameters.
  Batch label(std::size_t shard, std::vector<double> rows) const;

  ParamVector initial_params() const;

 private:
  Batch draw(std::size_t shard, std::uint64_t stream, std::uint64_t counter, std::size_t rows) const;

  ObjectiveSpec spec_;
  std::uint64_t seed_;
  ParamVector base_target_;
  std::vector<ParamVector> directions_;
  std::vector<ParamVector> targets_;
  std::vector<std::vector<double>> curvatures_;
  std::vector<Batch> probes_;
};

ShardSet make_shards(const ObjectiveSpec& spec, std::size_t shards, std::uint64_t seed);

double loss(const ObjectiveSpec& spec, const ParamVector& theta, const Batch& batch);
std::pair<double, ParamVector> loss_and_grad(const ObjectiveSpec& spec, const ParamVector& theta,
                                             const Batch& batch);

// Central differences (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps).
ParamVector finite_diff_grad(const ObjectiveSpec& spec, const ParamVector& theta,
                             const Batch& batch, double eps);

// Shared curvature diagonal of the quadratic, before per-shard spread.
std::vector<double> quadratic_curvature(const ObjectiveSpec& spec);

}  // namespace diloco
