#include "diloco/objectives.hpp"

#include <cmath>
#include <random>
#include <string>

#include "diloco/error.hpp"

namespace diloco {

namespace {

enum Stream : std::uint64_t {
  kTargetStream = 1,
  kDirectionStream = 2,
  kBatchStream = 3,
  kProbeStream = 4,
  kInitStream = 5,
  kCurvatureStream = 6,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                             std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return std::mt19937_64(h);
}

std::vector<double> gaussian(std::mt19937_64& engine, std::size_t n, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = stddev * dist(engine);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_finite_theta(const ParamVector& theta) {
  if (!theta.all_finite()) throw NumericError("loss_and_grad: non-finite parameters");
}

void require_dim(const ObjectiveSpec& spec, const ParamVector& theta) {
  if (theta.size() != spec.dim) {
    throw ConfigError("objective: parameter dimension " + std::to_string(theta.size()) +
                      " does not match spec dimension " + std::to_string(spec.dim));
  }
}

// Forward pass of y = w2^T tanh(W1 x + b1) for one row; fills `act` with the
// hidden activations.
double mlp_forward(const ObjectiveSpec& spec, std::span<const double> theta,
                   std::span<const double> x, std::vector<double>& act) {
  const std::size_t p = spec.input_dim;
  const std::size_t h = spec.hidden_dim();
  const auto w1 = theta.subspan(0, h * p);
  const auto b1 = theta.subspan(h * p, h);
  const auto w2 = theta.subspan(h * p + h, h);
  act.resize(h);
  double out = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    act[j] = std::tanh(dot(w1.subspan(j * p, p), x) + b1[j]);
    out += w2[j] * act[j];
  }
  return out;
}

std::pair<double, std::vector<double>> evaluate(const ObjectiveSpec& spec, const ParamVector& theta,
                                                const Batch& batch, bool want_grad) {
  require_dim(spec, theta);
  require_finite_theta(theta);
  if (batch.rows == 0) throw ConfigError("objective: empty batch");
  const double inv_rows = 1.0 / static_cast<double>(batch.rows);
  const std::size_t d = spec.dim;
  std::vector<double> grad(want_grad ? d : 0, 0.0);
  double total = 0.0;

  switch (spec.kind) {
    case ObjectiveKind::Quadratic: {
      const auto curvature = batch.curvature.empty() ? quadratic_curvature(spec) : batch.curvature;
      if (curvature.size() != d) throw ConfigError("objective: curvature dimension mismatch");
      for (std::size_t r = 0; r < batch.rows; ++r) {
        const auto c = batch.row(r);
        double row_loss = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double diff = theta[i] - c[i];
          row_loss += curvature[i] * diff * diff;
          if (want_grad) grad[i] += curvature[i] * diff;
        }
        total += 0.5 * row_loss;
      }
      break;
    }
    case ObjectiveKind::Linear: {
      for (std::size_t r = 0; r < batch.rows; ++r) {
        const auto c = batch.row(r);
        total += dot(c, theta.view());
        if (want_grad) {
          for (std::size_t i = 0; i < d; ++i) grad[i] += c[i];
        }
      }
      break;
    }
    case ObjectiveKind::Logistic: {
      for (std::size_t r = 0; r < batch.rows; ++r) {
        const auto x = batch.row(r);
        const double s = batch.targets[r];
        const double margin = s * dot(x, theta.view());
        total += softplus(-margin);
        if (want_grad) {
          const double coeff = -s * sigmoid(-margin);
          for (std::size_t i = 0; i < d; ++i) grad[i] += coeff * x[i];
        }
      }
      break;
    }
    case ObjectiveKind::MlpRegression: {
      const std::size_t p = spec.input_dim;
      const std::size_t h = spec.hidden_dim();
      std::vector<double> act;
      const auto params = theta.view();
      const auto w2 = params.subspan(h * p + h, h);
      for (std::size_t r = 0; r < batch.rows; ++r) {
        const auto x = batch.row(r);
        const double residual = mlp_forward(spec, params, x, act) - batch.targets[r];
        total += 0.5 * residual * residual;
        if (!want_grad) continue;
        for (std::size_t j = 0; j < h; ++j) {
          grad[h * p + h + j] += residual * act[j];
          const double dz = residual * w2[j] * (1.0 - act[j] * act[j]);
          grad[h * p + j] += dz;
          for (std::size_t k = 0; k < p; ++k) grad[j * p + k] += dz * x[k];
        }
      }
      break;
    }
  }

  for (double& g : grad) g *= inv_rows;
  return {total * inv_rows, std::move(grad)};
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Quadratic: return "quadratic";
    case ObjectiveKind::Logistic: return "logistic";
    case ObjectiveKind::MlpRegression: return "mlp-regression";
    case ObjectiveKind::Linear: return "linear";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "quadratic") return ObjectiveKind::Quadratic;
  if (name == "logistic") return ObjectiveKind::Logistic;
  if (name == "mlp-regression" || name == "mlp") return ObjectiveKind::MlpRegression;
  if (name == "linear") return ObjectiveKind::Linear;
  throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

void ObjectiveSpec::validate() const {
  if (dim < 1) throw ConfigError("objective.dim must be >= 1");
  if (!(heterogeneity >= 0.0)) throw ConfigError("objective.heterogeneity must be >= 0");
  if (!(noise >= 0.0)) throw ConfigError("objective.noise must be >= 0");
  if (batch_size < 1) throw ConfigError("objective.batch_size must be >= 1");
  if (probe_size < 1) throw ConfigError("objective.probe_size must be >= 1");
  if (kind == ObjectiveKind::Quadratic && !(condition >= 1.0)) {
    throw ConfigError("objective.condition must be >= 1");
  }
  if (!(curvature_spread >= 0.0)) throw ConfigError("objective.curvature_spread must be >= 0");
  if (kind == ObjectiveKind::MlpRegression) {
    if (input_dim < 1) throw ConfigError("objective.input_dim must be >= 1");
    if (dim % (input_dim + 2) != 0 || hidden_dim() == 0) {
      throw ConfigError("objective.dim must be a positive multiple of input_dim + 2 for "
                        "mlp-regression (got dim " + std::to_string(dim) + ", input_dim " +
                        std::to_string(input_dim) + ")");
    }
  }
}

std::vector<double> quadratic_curvature(const ObjectiveSpec& spec) {
  std::vector<double> a(spec.dim, 1.0);
  if (spec.dim > 1 && spec.condition != 1.0) {
    for (std::size_t i = 0; i < spec.dim; ++i) {
      a[i] = std::pow(spec.condition, -static_cast<double>(i) / static_cast<double>(spec.dim - 1));
    }
  }
  return a;
}

ShardSet::ShardSet(ObjectiveSpec spec, std::size_t shards, std::uint64_t seed)
    : spec_(spec), seed_(seed) {
  spec_.validate();
  if (shards == 0) throw ConfigError("make_shards: shard count must be >= 1");

  const std::size_t d = spec_.dim;
  auto engine = keyed_engine(spec_.seed, kTargetStream, 0, 0);
  std::vector<double> base;
  switch (spec_.kind) {
    case ObjectiveKind::Quadratic:
      base = gaussian(engine, d, 1.0);
      break;
    case ObjectiveKind::Linear:
      base = gaussian(engine, d, 1.0 / std::sqrt(static_cast<double>(d)));
      break;
    case ObjectiveKind::Logistic: {
      base = gaussian(engine, d, 1.0);
      const double norm = l2_norm(ParamVector(base));
      for (double& v : base) v *= 3.0 / norm;
      break;
    }
    case ObjectiveKind::MlpRegression: {
      const std::size_t p = spec_.input_dim;
      const std::size_t h = spec_.hidden_dim();
      auto w1 = gaussian(engine, h * p, 1.0 / std::sqrt(static_cast<double>(p)));
      auto b1 = gaussian(engine, h, 0.5);
      auto w2 = gaussian(engine, h, 1.0 / std::sqrt(static_cast<double>(h)));
      base = std::move(w1);
      base.insert(base.end(), b1.begin(), b1.end());
      base.insert(base.end(), w2.begin(), w2.end());
      break;
    }
  }
  base_target_ = ParamVector(std::move(base));

  for (std::size_t m = 0; m < shards; ++m) {
    auto dir_engine = keyed_engine(spec_.seed, kDirectionStream, m, 0);
    auto u = gaussian(dir_engine, d, 1.0);
    const double norm = l2_norm(ParamVector(u));
    for (double& v : u) v /= norm;
    ParamVector direction(std::move(u));
    targets_.push_back(spec_.heterogeneity == 0.0
                           ? base_target_
                           : linear_combine(1.0, base_target_, spec_.heterogeneity, direction));
    directions_.push_back(std::move(direction));
    if (spec_.kind == ObjectiveKind::Quadratic) {
      auto curvature = quadratic_curvature(spec_);
      if (spec_.curvature_spread > 0.0) {
        auto curv_engine = keyed_engine(spec_.seed, kCurvatureStream, m, 0);
        const auto z = gaussian(curv_engine, d, 1.0);
        for (std::size_t i = 0; i < d; ++i) curvature[i] *= std::exp(spec_.curvature_spread * z[i]);
      }
      curvatures_.push_back(std::move(curvature));
    }
  }
  for (std::size_t m = 0; m < shards; ++m) {
    probes_.push_back(draw(m, kProbeStream, 0, spec_.probe_size));
  }
}

Batch ShardSet::draw(std::size_t shard, std::uint64_t stream, std::uint64_t counter,
                     std::size_t rows) const {
  auto engine = keyed_engine(seed_, stream, shard, counter);
  const ParamVector& target = targets_.at(shard);
  const std::size_t d = spec_.dim;
  Batch b;
  b.rows = rows;
  switch (spec_.kind) {
    case ObjectiveKind::Quadratic:
    case ObjectiveKind::Linear: {
      b.cols = d;
      if (spec_.kind == ObjectiveKind::Quadratic) b.curvature = curvatures_.at(shard);
      b.inputs = gaussian(engine, rows * d, spec_.noise);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < d; ++i) b.inputs[r * d + i] += target[i];
      }
      break;
    }
    case ObjectiveKind::Logistic: {
      b.cols = d;
      b.inputs = gaussian(engine, rows * d, 1.0);
      const auto eps = gaussian(engine, rows, spec_.noise);
      b.targets.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        b.targets[r] = dot(b.row(r), target.view()) + eps[r] >= 0.0 ? 1.0 : -1.0;
      }
      break;
    }
    case ObjectiveKind::MlpRegression: {
      b.cols = spec_.input_dim;
      b.inputs = gaussian(engine, rows * b.cols, 1.0);
      const auto eps = gaussian(engine, rows, spec_.noise);
      b.targets.resize(rows);
      std::vector<double> act;
      for (std::size_t r = 0; r < rows; ++r) {
        b.targets[r] = mlp_forward(spec_, target.view(), b.row(r), act) + eps[r];
      }
      break;
    }
  }
  return b;
}

Batch ShardSet::batch(std::size_t shard, std::uint64_t step) const {
  if (shard >= size()) throw ConfigError("ShardSet::batch: shard index out of range");
  return draw(shard, kBatchStream, step, spec_.batch_size);
}

Batch ShardSet::label(std::size_t shard, std::vector<double> rows) const {
  const ParamVector& target = targets_.at(shard);
  Batch b;
  switch (spec_.kind) {
    case ObjectiveKind::Quadratic:
    case ObjectiveKind::Linear: {
      // Noise-free rows for these kinds are the shard target itself.
      b.cols = spec_.dim;
      if (spec_.kind == ObjectiveKind::Quadratic) b.curvature = curvatures_.at(shard);
      b.rows = rows.size() / b.cols;
      b.inputs.clear();
      for (std::size_t r = 0; r < b.rows; ++r) {
        b.inputs.insert(b.inputs.end(), target.values().begin(), target.values().end());
      }
      break;
    }
    case ObjectiveKind::Logistic: {
      b.cols = spec_.dim;
      b.rows = rows.size() / b.cols;
      b.inputs = std::move(rows);
      for (std::size_t r = 0; r < b.rows; ++r) {
        b.targets.push_back(dot(b.row(r), target.view()) >= 0.0 ? 1.0 : -1.0);
      }
      break;
    }
    case ObjectiveKind::MlpRegression: {
      b.cols = spec_.input_dim;
      b.rows = rows.size() / b.cols;
      b.inputs = std::move(rows);
      std::vector<double> act;
      for (std::size_t r = 0; r < b.rows; ++r) {
        b.targets.push_back(mlp_forward(spec_, target.view(), b.row(r), act));
      }
      break;
    }
  }
  if (b.rows == 0) throw ConfigError("ShardSet::label: need at least one full row");
  return b;
}

ParamVector ShardSet::initial_params() const {
  if (spec_.kind != ObjectiveKind::MlpRegression) return ParamVector::zeros(spec_.dim);
  const std::size_t p = spec_.input_dim;
  const std::size_t h = spec_.hidden_dim();
  auto engine = keyed_engine(spec_.seed, kInitStream, 0, 0);
  auto init = gaussian(engine, h * p, 1.0 / std::sqrt(static_cast<double>(p)));
  init.resize(h * p + h, 0.0);
  auto w2 = gaussian(engine, h, 0.5 / std::sqrt(static_cast<double>(h)));
  init.insert(init.end(), w2.begin(), w2.end());
  return ParamVector(std::move(init));
}

ShardSet make_shards(const ObjectiveSpec& spec, std::size_t shards, std::uint64_t seed) {
  return ShardSet(spec, shards, seed);
}

double loss(const ObjectiveSpec& spec, const ParamVector& theta, const Batch& batch) {
  return evaluate(spec, theta, batch, false).first;
}

std::pair<double, ParamVector> loss_and_grad(const ObjectiveSpec& spec, const ParamVector& theta,
                                             const Batch& batch) {
  auto [value, grad] = evaluate(spec, theta, batch, true);
  if (!std::isfinite(value)) throw NumericError("loss_and_grad: non-finite loss");
  return {value, ParamVector(std::move(grad))};
}

ParamVector finite_diff_grad(const ObjectiveSpec& spec, const ParamVector& theta,
                             const Batch& batch, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be > 0");
  require_dim(spec, theta);
  ParamVector probe = theta;
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps;
    const double up = loss(spec, probe, batch);
    probe[i] = theta[i] - eps;
    const double down = loss(spec, probe, batch);
    probe[i] = theta[i];
    out[i] = (up - down) / (2.0 * eps);
  }
  return ParamVector(std::move(out));
}

}  // namespace diloco
