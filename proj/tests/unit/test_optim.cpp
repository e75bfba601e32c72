#include <gtest/gtest.h>

#include <cmath>

#include "fmbeam/errors.hpp"
#include "fmbeam/optim.hpp"

using namespace fmbeam;

TEST(Adam, StepDecaySchedule) {
  AdamConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lr_at(0), 1e-3);
  EXPECT_DOUBLE_EQ(cfg.lr_at(49), 1e-3);
  EXPECT_DOUBLE_EQ(cfg.lr_at(50), 5e-4);
  EXPECT_DOUBLE_EQ(cfg.lr_at(99), 5e-4);
  EXPECT_DOUBLE_EQ(cfg.lr_at(100), 2.5e-4);
  cfg.decay_every = 0;
  EXPECT_DOUBLE_EQ(cfg.lr_at(1000), 1e-3);
}

TEST(Adam, MatchesHandComputedSteps) {
  ParamStore ps;
  ps.add("w", Tensor::matrix({{1.0, -2.0}}));
  AdamConfig cfg;
  cfg.base_lr = 0.1;
  Adam adam(ps, cfg);
  const double g[3][2] = {{0.5, -1.0}, {0.25, 2.0}, {-1.0, 0.0}};
  double w[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    std::vector<Tensor> grads{Tensor::matrix({{g[t - 1][0], g[t - 1][1]}})};
    adam.step(ps, grads, 0);
    for (int k = 0; k < 2; ++k) {
      m[k] = 0.9 * m[k] + 0.1 * g[t - 1][k];
      v[k] = 0.999 * v[k] + 0.001 * g[t - 1][k] * g[t - 1][k];
      const double mh = m[k] / (1 - std::pow(0.9, t));
      const double vh = v[k] / (1 - std::pow(0.999, t));
      w[k] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
    EXPECT_NEAR(ps[0].value[0], w[0], 1e-15);
    EXPECT_NEAR(ps[0].value[1], w[1], 1e-15);
    EXPECT_EQ(adam.steps(), static_cast<std::uint64_t>(t));
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore ps;
  ps.add("w", Tensor::scalar(3.0));
  Adam adam(ps, AdamConfig{});
  std::vector<Tensor> grads{Tensor::scalar(123.0)};
  adam.step(ps, grads, 0);
  EXPECT_NEAR(ps[0].value[0], 3.0 - 1e-3, 1e-12);
}

TEST(Adam, RejectsMismatchedGradients) {
  ParamStore ps;
  ps.add("w", Tensor::zeros(2, 2));
  Adam adam(ps, AdamConfig{});
  std::vector<Tensor> wrong{Tensor::zeros(1, 2)};
  EXPECT_THROW(adam.step(ps, wrong, 0), ShapeError);
  std::vector<Tensor> none;
  EXPECT_THROW(adam.step(ps, none, 0), ShapeError);
}
