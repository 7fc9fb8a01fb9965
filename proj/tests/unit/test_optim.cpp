#include <gtest/gtest.h>

#include <cmath>

#include "diloco/error.hpp"
#include "diloco/optim.hpp"

using namespace diloco;

TEST(Adam, HandTraceThreeSteps) {
  AdamConfig cfg;
  cfg.lr = 0.1;
  auto state = AdamState::init(1, cfg);
  ParamVector theta{1.0};
  // Reference values from a 40-digit evaluation of the bias-corrected update.
  const double grads[] = {1.0, -2.0, 0.5};
  const double expected[] = {0.9000000009999999900000001, 0.936560772102605395793431,
                             0.950238830667981781264691};
  for (int t = 0; t < 3; ++t) {
    auto [next_state, next] = adam_step(std::move(state), theta, ParamVector{grads[t]});
    state = std::move(next_state);
    theta = std::move(next);
    EXPECT_NEAR(theta[0], expected[t], 1e-14) << "step " << t + 1;
  }
  EXPECT_EQ(state.t, 3u);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  AdamConfig cfg;
  cfg.lr = 0.01;
  auto [state, next] = adam_step(AdamState::init(3, cfg), ParamVector{0.0, 0.0, 0.0},
                                 ParamVector{1e-3, -50.0, 7.0});
  EXPECT_NEAR(next[0], -0.01 * 1e-3 / (1e-3 + 1e-8), 1e-12);
  EXPECT_NEAR(next[1], 0.01, 1e-9);
  EXPECT_NEAR(next[2], -0.01, 1e-9);
}

TEST(Adam, DecoupledWeightDecay) {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  // Zero gradient: only the decay term moves theta.
  auto [state, next] = adam_step(AdamState::init(1, cfg), ParamVector{2.0}, ParamVector{0.0});
  EXPECT_DOUBLE_EQ(next[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Adam, ResetClearsMoments) {
  auto [state, next] = adam_step(AdamState::init(2, {}), ParamVector{1.0, 1.0}, ParamVector{1.0, 2.0});
  state.reset();
  EXPECT_EQ(state.t, 0u);
  EXPECT_EQ(state.m, ParamVector::zeros(2));
  EXPECT_EQ(state.v, ParamVector::zeros(2));
}

TEST(Adam, RejectsNonFiniteGradientAndMismatch) {
  EXPECT_THROW(adam_step(AdamState::init(1, {}), ParamVector{1.0}, ParamVector{NAN}), NumericError);
  EXPECT_THROW(adam_step(AdamState::init(2, {}), ParamVector{1.0}, ParamVector{1.0}), ConfigError);
}

TEST(Nesterov, HandTrace) {
  NesterovConfig cfg;  // lr 0.4, momentum 0.9
  auto state = NesterovState::init(1, cfg);
  auto [s1, t1] = nesterov_outer_step(std::move(state), ParamVector{0.0}, ParamVector{1.0});
  EXPECT_DOUBLE_EQ(s1.velocity[0], 1.0);
  EXPECT_NEAR(t1[0], -0.4 * (0.9 * 1.0 + 1.0), 1e-15);
  auto [s2, t2] = nesterov_outer_step(std::move(s1), ParamVector{0.0}, ParamVector{1.0});
  EXPECT_NEAR(s2.velocity[0], 1.9, 1e-15);
  EXPECT_NEAR(t2[0], -0.4 * (0.9 * 1.9 + 1.0), 1e-15);
}

TEST(Nesterov, UnitLrZeroMomentumAppliesDelta) {
  NesterovConfig cfg{1.0, 0.0};
  auto [s, next] = nesterov_outer_step(NesterovState::init(2, cfg), ParamVector{3.0, -1.0},
                                       ParamVector{0.5, -0.5});
  EXPECT_EQ(next, (ParamVector{2.5, -0.5}));
}

TEST(Nesterov, RejectsNonFiniteDelta) {
  EXPECT_THROW(nesterov_outer_step(NesterovState::init(1, {}), ParamVector{0.0}, ParamVector{INFINITY}),
               NumericError);
}

TEST(Sgd, Step) {
  EXPECT_EQ(sgd_step(ParamVector{1.0, 2.0}, ParamVector{0.5, -1.0}, 2.0), (ParamVector{0.0, 4.0}));
}
