#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/optim.hpp"
#include "fmbeam/predictor.hpp"

namespace fmbeam {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // epochs; 0 writes only the final checkpoint

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);  // rejects unknown keys

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // sample-weighted mean over the epoch's minibatches
};

/// Minibatch Adam training shared by every predictor.
///
/// Epoch e shuffles with Rng(seed).fork(e) and draws any per-batch noise
/// from the same stream, so a run resumed from a checkpoint reproduces the
/// remaining epochs exactly.
class Trainer {
 public:
  using EpochCallback = std::function<void(const EpochRecord&)>;

  Trainer(Predictor& model, TrainConfig cfg);

  // One pass over `train`; `epoch` is zero-based and selects the schedule.
  LossBreakdown train_epoch(std::span<const WindowSample> train, std::size_t epoch);

  // Trains up to epoch `until` (default cfg.epochs). With a non-empty
  // out_dir, rewrites out_dir/losses.csv every epoch, saves
  // checkpoint_eNNNN.ckpt every checkpoint_every epochs and model.ckpt
  // at the end.
  const std::vector<EpochRecord>& fit(std::span<const WindowSample> train,
                                      const std::filesystem::path& out_dir = {},
                                      std::size_t until = 0, const EpochCallback& on_epoch = {});

  std::size_t completed_epochs() const noexcept { return history_.size(); }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }
  Predictor& model() noexcept { return model_; }
  const TrainConfig& config() const noexcept { return cfg_; }

  // Parameters, optimizer moments, loss history and both configs.
  void save(const std::filesystem::path& path) const;
  // Refuses checkpoints written for a different predictor or training config.
  void resume(const std::filesystem::path& path);

 private:
  Predictor& model_;
  TrainConfig cfg_;
  Adam adam_;
  std::vector<EpochRecord> history_;
};

void write_losses_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);
std::vector<EpochRecord> read_losses_csv(const std::filesystem::path& path);

}  // namespace fmbeam
