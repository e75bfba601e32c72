#include <gtest/gtest.h>

#include "fmbeam/errors.hpp"
#include "fmbeam/tensor.hpp"
#include "oracles.hpp"

using namespace fmbeam;
using fmbeam::testing::naive_matmul;
using fmbeam::testing::random_tensor;

TEST(Tensor, MatmulHandCase) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(a, b), Tensor::matrix({{19, 22}, {43, 50}}));
}

TEST(Tensor, MatmulMatchesTripleLoop) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(17), k = 1 + rng.below(33), n = 1 + rng.below(17);
    const Tensor a = random_tensor(m, k, rng);
    const Tensor b = random_tensor(k, n, rng);
    EXPECT_LT(max_abs_diff(matmul(a, b), naive_matmul(a, b)), 1e-12);
  }
}

TEST(Tensor, MatmulIdentityAndZeroDims) {
  Rng rng(2);
  const Tensor a = random_tensor(4, 4, rng);
  Tensor eye = Tensor::zeros(4, 4);
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0;
  EXPECT_EQ(matmul(a, eye), a);
  const Tensor empty = matmul(Tensor::zeros(0, 3), Tensor::zeros(3, 2));
  EXPECT_EQ(empty.rows(), 0u);
  EXPECT_EQ(empty.cols(), 2u);
}

TEST(Tensor, MatmulInnerDimMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros(2, 3), Tensor::zeros(4, 2)), ShapeError);
}

TEST(Tensor, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  const Tensor x = Tensor::matrix({{1000.0, 1000.0, 999.0}, {-5.0, 0.0, 5.0}});
  const Tensor p = softmax_rows(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (double v : p.row_span(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_TRUE(p.all_finite());
  EXPECT_NEAR(p(0, 0), p(0, 1), 1e-15);
}

TEST(Tensor, ShapeAccessors) {
  const Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.shape_string(), "[2x3]");
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1.0, 2.0}), ShapeError);
  EXPECT_EQ(transpose(Tensor::matrix({{1, 2, 3}})), Tensor::matrix({{1}, {2}, {3}}));
}

TEST(Tensor, ItemRequiresSingleElement) {
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_THROW(Tensor::zeros(2, 1).item(), ShapeError);
}
