#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/data.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/model.hpp"
#include "fmbeam/predictor.hpp"
#include "fmbeam/trainer.hpp"

namespace fmbeam {

// Fraction of rows whose label is among the row's top-k entries, with the
// same tie-breaking as predict_topk.
double acc_k(const Tensor& probs, std::span<const int> labels, std::size_t k);

/// Top-K accuracy per prediction step over a test set.
struct MetricsReport {
  std::string model;
  std::string config;       // window name, "A" or "B" for the standard windows
  std::string fingerprint;  // of the data and split the report was computed on
  std::size_t n_test = 0;
  std::size_t param_count = 0;
  std::vector<std::size_t> ks;
  std::vector<std::vector<double>> per_step;  // per_step[i][t] for ks[i]
  std::vector<double> average;                // mean over steps, per K

  std::size_t steps() const { return per_step.empty() ? 0 : per_step.front().size(); }
  double at(std::size_t k, std::size_t step) const;
  double mean(std::size_t k) const;
};

// Batched inference over every test window; `chunk` bounds the batch size.
MetricsReport evaluate(const Predictor& model, std::span<const WindowSample> test,
                       const std::vector<std::size_t>& ks = {1, 3},
                       const std::string& fingerprint = "", std::size_t chunk = 256);

/// One ablation row: loss weights and condition encoder.
struct AblationVariant {
  std::string name;
  LossWeights weights;
  CondEncoder cond = CondEncoder::transformer;
};

// Base, w/o L_FM, w/o L_Term, LSTM cond., RNN cond.
std::vector<AblationVariant> ablation_variants();

struct AblationCell {
  std::string variant;
  std::string config;
  std::size_t k = 1;
  double acc = 0.0;
  std::string fingerprint;  // identical across cells when seeds and split are shared
};

struct AblationGrid {
  std::vector<std::string> variants;
  std::vector<std::string> configs;
  std::vector<std::size_t> ks;
  std::vector<AblationCell> cells;
  std::string error;  // set when a cell failed; cells then holds the partial grid
  std::exception_ptr failure;

  bool complete() const { return error.empty() && cells.size() == variants.size() * configs.size() * ks.size(); }
  const AblationCell* find(const std::string& variant, const std::string& config,
                           std::size_t k) const;
};

struct AblationSetup {
  ModelConfig model;
  TrainConfig train;
  std::vector<WindowConfig> windows{config_a(), config_b()};
  std::vector<std::size_t> ks{1, 3};
  std::uint64_t init_seed = 0;
  std::string data_fingerprint;
};

using AblationProgress = std::function<void(const std::string& variant, const std::string& config,
                                            const MetricsReport& report)>;

// Trains every variant on every window with the same split and seeds. A
// failing cell stops the run and is reported through AblationGrid::error.
AblationGrid run_ablation(const std::vector<Sequence>& sequences, const SequenceSplit& split,
                          const AblationSetup& setup, const AblationProgress& progress = {});

struct BenchResult {
  std::string model;
  std::size_t param_count = 0;
  std::size_t samples = 0;
  double mean_s = 0.0;
  double median_s = 0.0;
  double p95_s = 0.0;
  double field_evals_per_sample = 0.0;  // FM only
  std::string hardware;
};

// Times `samples` single-window inferences after `warmup` untimed ones,
// cycling through `inputs`, on the calling thread.
BenchResult bench_inference(const Predictor& model, std::span<const WindowSample> inputs,
                            std::size_t samples = 1000, std::size_t warmup = 100);

// Smallest observed nonzero step of the steady clock, in seconds.
double clock_tick_seconds();
std::string hardware_descriptor();

// metrics.csv columns: model,config,step,K,acc (step 1-based).
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports);
std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path);
// One row per step, one ACC column per (model, config, K).
void write_curves_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports);
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const BenchResult& r);
nlohmann::json to_json(const AblationGrid& g);
void write_ablation_csv(const std::filesystem::path& path, const AblationGrid& grid);

// Writes metrics.csv, curves.csv and summary.json into `dir`. `extra` is
// merged into summary.json.
void emit_report(const std::filesystem::path& dir, std::span<const MetricsReport> reports,
                 const nlohmann::json& extra = nlohmann::json::object());

}  // namespace fmbeam
