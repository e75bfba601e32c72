#include <gtest/gtest.h>

#include <cmath>

#include "fmbeam/autograd.hpp"
#include "fmbeam/errors.hpp"
#include "gradient_suite.hpp"
#include "oracles.hpp"

using namespace fmbeam;
using namespace fmbeam::testing;

TEST(Autograd, GradientSuitePassesFiniteDifferences) {
  for (const auto& c : run_gradient_suite(20)) {
    EXPECT_LT(c.max_rel_error, 1e-4) << c.name;
    EXPECT_GT(c.checked, 0u) << c.name;
  }
}

TEST(Autograd, MatmulGradientHandCase) {
  Tape tape;
  Var a = tape.leaf(Tensor::matrix({{1, 2}, {3, 4}}), true);
  Var b = tape.leaf(Tensor::matrix({{5}, {6}}), true);
  tape.backward(sum(matmul(a, b)));
  // d/dA sum(AB) = 1 * B^T for each row; d/dB = column sums of A.
  EXPECT_EQ(tape.grad(a), Tensor::matrix({{5, 6}, {5, 6}}));
  EXPECT_EQ(tape.grad(b), Tensor::matrix({{4}, {6}}));
}

TEST(Autograd, SharedInputAccumulates) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(3.0), true);
  tape.backward(sum(add(mul(x, x), x)));  // x^2 + x
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 7.0);
}

TEST(Autograd, UnusedInputHasZeroGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor::zeros(2, 2), true);
  Var y = tape.leaf(Tensor::filled(2, 2, 1.0), true);
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(x), Tensor::zeros(2, 2));
}

TEST(Autograd, BackwardNeedsScalar) {
  Tape tape;
  Var x = tape.leaf(Tensor::zeros(2, 2), true);
  EXPECT_THROW(tape.backward(relu(x)), ShapeError);
}

TEST(Autograd, NonFiniteOutputIsAnError) {
  Tape tape;
  Var x = tape.leaf(Tensor::scalar(1e308), true);
  EXPECT_THROW(scale(x, 10.0), NumericError);
}

TEST(Autograd, ShapeMismatchThrows) {
  Tape tape;
  Var a = tape.constant(Tensor::zeros(2, 3));
  Var b = tape.constant(Tensor::zeros(3, 2));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(slice_cols(a, 2, 2), ShapeError);
  EXPECT_THROW(mean_pool(a, 4), ShapeError);
  EXPECT_THROW(attention(a, a, a, 1, 2, 2), ShapeError);
}

TEST(Autograd, ParamsFeedGradientsBackToStore) {
  ParamStore ps;
  ps.add("w", Tensor::matrix({{2.0, -1.0}}));
  Tape tape(&ps);
  Var w = tape.param(0);
  EXPECT_EQ(tape.param(0).id, w.id);
  tape.backward(sum(mul(w, w)));
  EXPECT_EQ(tape.param_grad(0), Tensor::matrix({{4.0, -2.0}}));
}

TEST(Autograd, LogClampedStopsGradientBelowFloor) {
  Tape tape;
  Var x = tape.leaf(Tensor::matrix({{0.0, 0.5}}), true);
  Var y = log_clamped(x, 1e-12);
  EXPECT_NEAR(tape.value(y)(0, 0), std::log(1e-12), 1e-12);
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(x)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 1), 2.0);
}

TEST(Autograd, AttentionSingleTokenReturnsValues) {
  Rng rng(5);
  Tape tape;
  const Tensor v = random_tensor(3, 4, rng);
  Var out = attention(tape.constant(random_tensor(3, 4, rng)), tape.constant(random_tensor(3, 4, rng)),
                      tape.constant(v), 3, 1, 2);
  EXPECT_LT(max_abs_diff(tape.value(out), v), 1e-15);
}
