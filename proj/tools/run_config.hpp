#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/baselines.hpp"
#include "fmbeam/data.hpp"
#include "fmbeam/model.hpp"
#include "fmbeam/simulator.hpp"
#include "fmbeam/trainer.hpp"

namespace fmbeam::cli {

struct DataSection {
  std::size_t sequences = 70;
  std::string variant = "A";
  double test_fraction = 0.2;
  std::size_t stride = 1;
  int beam_base = 0;

  WindowConfig window() const;
};

struct EvalSection {
  std::vector<std::size_t> ks{1, 3};
  std::size_t bench_samples = 1000;
  std::size_t bench_warmup = 100;
};

/// Declarative description of a run. Defaults follow the reference
/// settings: M = 32, batch 32, 100 epochs, lr 1e-3 halved every 50 epochs.
struct RunConfig {
  std::uint64_t seed = 0;
  ScenarioConfig simulator;
  DataSection data;
  ModelConfig model;
  RecurrentConfig rnn{CellType::elman};
  RecurrentConfig lstm{CellType::lstm};
  TrainConfig training;
  EvalSection eval;
  std::string out = "runs";

  void validate() const;
  // Stable hash of the canonical JSON form.
  std::string fingerprint() const;
};

// Independent per-component seeds from the root seed.
enum class SeedStream : std::uint64_t { simulate = 1, split = 2, init = 3, train = 4 };
std::uint64_t derive_seed(std::uint64_t root, SeedStream stream);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);  // rejects unknown keys
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fmbeam::cli
