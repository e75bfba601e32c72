#include "fmbeam/optim.hpp"

#include <cmath>

#include "fmbeam/errors.hpp"

namespace fmbeam {

double AdamConfig::lr_at(std::size_t epoch) const {
  if (decay_every == 0) return base_lr;
  return base_lr * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

Adam::Adam(const ParamStore& params, AdamConfig config) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.value.shape(), 0.0);
    v_.emplace_back(p.value.shape(), 0.0);
  }
}

void Adam::step(ParamStore& params, std::span<const Tensor> grads, std::size_t epoch) {
  if (grads.size() != params.size() || m_.size() != params.size()) {
    throw ShapeError("adam: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].value.size()) {
      throw ShapeError("adam: gradient " + grads[i].shape_string() + " for parameter '" +
                       params[i].name + "' " + params[i].value.shape_string());
    }
  }
  ++steps_;
  const double lr = config_.lr_at(epoch);
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace fmbeam
