#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fmbeam {

/// Dense row-major array of doubles.
///
/// Arbitrary rank is allowed for storage and checkpointing, but the math in
/// this library is written for matrices: rank 0 reads as 1x1, rank 1 `[n]` as
/// a 1xn row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor filled(std::size_t rows, std::size_t cols, double v) { return Tensor({rows, cols}, v); }
  static Tensor scalar(double v) { return Tensor({1, 1}, v); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row(std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row_span(std::size_t r) const noexcept {
    return {data_.data() + r * cols(), cols()};
  }

  double item() const;  // value of a single-element tensor
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept;
  void fill(double v) noexcept;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t product(std::span<const std::size_t> dims) noexcept;

// Plain (non-differentiable) tensor math used outside of training graphs.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& x);
Tensor transpose(const Tensor& x);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace fmbeam
