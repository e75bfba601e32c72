#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fmbeam/tensor.hpp"

namespace fmbeam {

struct Parameter {
  std::string name;
  Tensor value;
};

/// Ordered, named collection of trainable tensors. Networks refer to their
/// parameters by index, so a copied store yields an independent model.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t index(const std::string& name) const;  // throws DataError

  std::size_t scalar_count() const noexcept;
  bool all_finite() const noexcept;

  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

}  // namespace fmbeam
