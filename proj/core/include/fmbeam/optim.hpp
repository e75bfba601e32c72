#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fmbeam/params.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

struct AdamConfig {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_factor = 0.5;
  std::size_t decay_every = 50;  // epochs; 0 disables decay

  // Step decay: base_lr * factor^floor(epoch / every), epoch zero-based.
  double lr_at(std::size_t epoch) const;
};

/// Adam with bias-corrected moments and a per-epoch step-decayed rate.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  void step(ParamStore& params, std::span<const Tensor> grads, std::size_t epoch);

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return steps_; }

  // Exposed for checkpoint/resume.
  std::vector<Tensor>& first_moments() noexcept { return m_; }
  std::vector<Tensor>& second_moments() noexcept { return v_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }
  void set_steps(std::uint64_t steps) noexcept { steps_ = steps; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace fmbeam
