#include "fmbeam/params.hpp"

#include "fmbeam/errors.hpp"

namespace fmbeam {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw DataError("unknown parameter '" + name + "'");
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParamStore::all_finite() const noexcept {
  for (const auto& p : params_) {
    if (!p.value.all_finite()) return false;
  }
  return true;
}

}  // namespace fmbeam
