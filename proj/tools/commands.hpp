#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fmbeam/eval.hpp"
#include "fmbeam/trainer.hpp"
#include "run_config.hpp"

namespace fmbeam::cli {

inline constexpr const char* kOutDirEnv = "FMBEAM_OUT_DIR";

/// Flags shared by every subcommand. Flags beat the environment, which
/// beats the config file.
struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::vector<std::size_t> ks;
};

RunConfig resolve_config(const CommonOptions& opts);

struct SimulateResult {
  std::filesystem::path file;
  std::size_t records = 0;
  std::size_t sequences = 0;
  std::string hash;
};

SimulateResult cmd_simulate(const RunConfig& cfg);

struct TrainRequest {
  std::string model = "fm";
  std::filesystem::path data;
  std::optional<std::filesystem::path> split;   // reuse a manifest instead of splitting
  std::optional<std::filesystem::path> resume;  // training checkpoint
  std::size_t until = 0;                        // stop after this epoch; 0 = all
};

struct TrainResult {
  std::filesystem::path dir;
  std::filesystem::path checkpoint;
  std::vector<EpochRecord> history;
  std::size_t train_windows = 0;
  std::size_t param_count = 0;
};

using Log = std::function<void(const std::string&)>;

// Trains into <out>/<model>-<variant>/.
TrainResult cmd_train(const RunConfig& cfg, const TrainRequest& req, const Log& log = {});

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::optional<std::filesystem::path> split;  // defaults to split.json beside the checkpoint
};

// Writes metrics.csv, curves.csv and summary.json into <out>/eval-<model>-<variant>/.
MetricsReport cmd_eval(const RunConfig& cfg, const EvalRequest& req);

// Writes ablation.csv and ablation.json into <out>/ablation/; rethrows the
// first cell failure after writing the partial grid.
AblationGrid cmd_ablate(const RunConfig& cfg, const std::filesystem::path& data,
                        const Log& log = {});

// Writes bench.csv and bench.json into <out>/bench/.
std::vector<BenchResult> cmd_bench(const RunConfig& cfg,
                                   const std::vector<std::filesystem::path>& checkpoints,
                                   const std::filesystem::path& data);

void print_bench_table(std::ostream& os, const std::vector<BenchResult>& results);
void print_ablation_table(std::ostream& os, const AblationGrid& grid);

// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

}  // namespace fmbeam::cli
