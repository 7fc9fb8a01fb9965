#include "diloco/optim.hpp"

#include <cmath>
#include <string>

#include "diloco/error.hpp"

namespace diloco {

namespace {

void require_match(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ConfigError(std::string(op) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}

}  // namespace

AdamState AdamState::init(std::size_t dim, const AdamConfig& hyper) {
  return AdamState{hyper, ParamVector::zeros(dim), ParamVector::zeros(dim), 0};
}

void AdamState::reset() {
  m = ParamVector::zeros(m.size());
  v = ParamVector::zeros(v.size());
  t = 0;
}

NesterovState NesterovState::init(std::size_t dim, const NesterovConfig& hyper) {
  return NesterovState{hyper, ParamVector::zeros(dim)};
}

std::pair<AdamState, ParamVector> adam_step(AdamState state, const ParamVector& theta,
                                            const ParamVector& grad) {
  require_match(theta.size(), grad.size(), "adam_step");
  require_match(theta.size(), state.m.size(), "adam_step");
  if (!grad.all_finite()) throw NumericError("adam_step: non-finite gradient");

  const auto& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);

  ParamVector next = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    double update = m_hat / (std::sqrt(v_hat) + h.eps);
    if (h.weight_decay != 0.0) update += h.weight_decay * theta[i];
    next[i] = theta[i] - h.lr * update;
  }
  return {std::move(state), std::move(next)};
}

std::pair<NesterovState, ParamVector> nesterov_outer_step(NesterovState state,
                                                          const ParamVector& anchor,
                                                          const ParamVector& delta) {
  require_match(anchor.size(), delta.size(), "nesterov_outer_step");
  require_match(anchor.size(), state.velocity.size(), "nesterov_outer_step");
  if (!delta.all_finite()) throw NumericError("nesterov_outer_step: non-finite outer gradient");

  const double mu = state.hyper.momentum;
  const double lr = state.hyper.lr;
  ParamVector next = anchor;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    state.velocity[i] = mu * state.velocity[i] + delta[i];
    next[i] = anchor[i] - lr * (mu * state.velocity[i] + delta[i]);
  }
  return {std::move(state), std::move(next)};
}

ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad, double lr) {
  require_match(theta.size(), grad.size(), "sgd_step");
  ParamVector next = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) next[i] = theta[i] - lr * grad[i];
  return next;
}

}  // namespace diloco
