#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/autograd.hpp"
#include "fmbeam/nn.hpp"
#include "fmbeam/params.hpp"

namespace fmbeam {

enum class CondEncoder { transformer, lstm, rnn };

std::string cond_encoder_name(CondEncoder e);
CondEncoder parse_cond_encoder(const std::string& name);

struct ModelConfig {
  std::size_t beams = 32;
  std::vector<std::size_t> box_hidden{16, 64, 128};
  CondEncoder cond = CondEncoder::transformer;
  std::size_t cond_layers = 2;
  std::size_t cond_heads = 4;
  std::size_t cond_dim = 0;  // 0 means 4 * beams
  std::size_t cond_ff = 0;   // 0 means cond_dim
  std::vector<std::size_t> field_hidden{128, 128};
  Activation activation = Activation::relu;
  bool tau_embedding = false;     // sinusoidal features of tau instead of the raw scalar
  std::size_t tau_features = 16;  // even; used only with tau_embedding

  std::size_t condition_dim() const noexcept { return cond_dim != 0 ? cond_dim : 4 * beams; }
  std::size_t ff_dim() const noexcept { return cond_ff != 0 ? cond_ff : condition_dim(); }
  std::size_t tau_dim() const noexcept { return tau_embedding ? tau_features : 1; }
  std::size_t field_input_dim() const noexcept { return beams + tau_dim() + condition_dim(); }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);  // rejects unknown keys

/// Velocity field interface used by the rollout and the FM loss.
class VectorField {
 public:
  virtual ~VectorField() = default;
  // z: B x M, tau: B x 1, c: B x D  ->  B x M
  virtual Var velocity(Tape& tape, Var z, Var tau, Var c) const = 0;
};

/// The three trainable networks: box embedding g_box, condition encoder
/// f_cond and conditional vector field u_theta. Parameter names are
/// prefixed "g_box.", "f_cond." and "u_theta.".
class FlowNetworks : public VectorField {
 public:
  FlowNetworks(const ModelConfig& cfg, std::uint64_t init_seed);
  FlowNetworks(const FlowNetworks& other);
  FlowNetworks& operator=(const FlowNetworks&) = delete;

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  // n x 4 -> n x M
  Var box_embed(Tape& tape, Var boxes) const;
  // (batch*hist) x M, rows grouped per sample -> batch x D
  Var condition(Tape& tape, Var features, std::size_t batch, std::size_t hist) const;
  Var velocity(Tape& tape, Var z, Var tau, Var c) const override;

  std::size_t param_count() const noexcept { return params_.scalar_count(); }
  std::size_t param_count(const std::string& prefix) const;

  // Number of u_theta evaluations (one per batched call) since the last reset.
  std::uint64_t field_evaluations() const noexcept { return field_evals_.load(); }
  void reset_field_evaluations() noexcept { field_evals_.store(0); }

 private:
  ModelConfig cfg_;
  ParamStore params_;
  Mlp box_;
  TransformerEncoder transformer_;
  RecurrentCell cond_cell_;
  Mlp field_;
  mutable std::atomic<std::uint64_t> field_evals_{0};
};

// Sinusoidal features sin(w_k tau), cos(w_k tau) interleaved per k, w_k = 2^k pi.
Tensor tau_features(const Tensor& tau, std::size_t features);

}  // namespace fmbeam
