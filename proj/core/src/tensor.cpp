#include "fmbeam/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fmbeam/errors.hpp"

namespace fmbeam {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

std::size_t product(std::span<const std::size_t> dims) noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("value count " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.size() < 2) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string());
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::same_shape(const Tensor& other) const noexcept {
  return rows() == other.rows() && cols() == other.cols() && size() == other.size();
}

void Tensor::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i != 0) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul " + a.shape_string() + " * " + b.shape_string());
  }
  Tensor out = Tensor::zeros(a.rows(), b.cols());
  Eigen::Map<const RowMatrix> ma(a.data().data(), a.rows(), a.cols());
  Eigen::Map<const RowMatrix> mb(b.data().data(), b.rows(), b.cols());
  Eigen::Map<RowMatrix> mo(out.data().data(), out.rows(), out.cols());
  mo.noalias() = ma * mb;
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto o = out.row_span(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - peak);
      total += o[c];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  Tensor out = Tensor::zeros(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("max_abs_diff size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace fmbeam
