#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "fmbeam/nn.hpp"
#include "fmbeam/predictor.hpp"

namespace fmbeam {

enum class DecodeMode { autoregressive, direct };

/// Recurrent baseline. Each step reads [box, previous prediction]: history
/// steps feed [x_t, 0], then every prediction step after the first feeds
/// [0, y_{t-1}] back through the cell.
struct RecurrentConfig {
  CellType cell = CellType::lstm;
  std::size_t beams = 32;
  std::size_t hidden = 0;  // 0 picks the size matching the reference parameter budget
  DecodeMode decode = DecodeMode::autoregressive;

  std::size_t hidden_size() const noexcept;
  std::size_t input_dim() const noexcept { return 4 + beams; }
  void validate() const;
};

nlohmann::json to_json(const RecurrentConfig& cfg);
RecurrentConfig recurrent_config_from_json(const nlohmann::json& j);

class RecurrentPredictor : public Predictor {
 public:
  RecurrentPredictor(const RecurrentConfig& cfg, const WindowConfig& window,
                     std::uint64_t init_seed);

  std::string kind() const override { return cell_name(cfg_.cell); }
  ParamStore& params() override { return params_; }
  const ParamStore& params() const override { return params_; }
  const WindowConfig& window() const override { return window_; }
  std::size_t beams() const override { return cfg_.beams; }

  LossTerms loss(Tape& tape, const Batch& batch, Rng& rng) const override;
  std::vector<Tensor> predict(const Batch& batch) const override;
  nlohmann::json config_json() const override;

  const RecurrentConfig& config() const noexcept { return cfg_; }
  // Probability rows per prediction step, each B x M.
  std::vector<Var> forward(Tape& tape, const Batch& batch) const;

 private:
  RecurrentConfig cfg_;
  WindowConfig window_;
  std::uint64_t init_seed_;
  ParamStore params_;
  RecurrentCell cell_;
  Linear head_;
};

}  // namespace fmbeam
