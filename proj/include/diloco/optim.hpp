#pragma once

#include <cstdint>
#include <utility>

#include "diloco/tensorcore.hpp"

namespace diloco {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  // Decoupled (AdamW-style) decay; off by default.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig hyper;
  ParamVector m;
  ParamVector v;
  std::uint64_t t = 0;

  static AdamState init(std::size_t dim, const AdamConfig& hyper);
  // Zero both moments and the step counter, keeping hyperparameters.
  void reset();
};

struct NesterovConfig {
  double lr = 0.4;
  double momentum = 0.9;
};

// Velocity of the outer optimizer over one parameter region (the whole
// vector or a single fragment).
struct NesterovState {
  NesterovConfig hyper;
  ParamVector velocity;

  static NesterovState init(std::size_t dim, const NesterovConfig& hyper);
};

// One bias-corrected Adam step. Throws NumericError on a non-finite gradient.
std::pair<AdamState, ParamVector> adam_step(AdamState state, const ParamVector& theta,
                                            const ParamVector& grad);

// velocity <- momentum * velocity + delta
// result   <- anchor - lr * (momentum * velocity + delta)
// `delta` is the outer gradient (a descent direction, anchor - theta_end).
std::pair<NesterovState, ParamVector> nesterov_outer_step(NesterovState state,
                                                          const ParamVector& anchor,
                                                          const ParamVector& delta);

ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad, double lr);

}  // namespace diloco
