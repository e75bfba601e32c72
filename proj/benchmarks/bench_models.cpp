#include <benchmark/benchmark.h>

#include "fmbeam/baselines.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/trainer.hpp"

using namespace fmbeam;

namespace {

Tensor history(std::size_t hist, Rng& rng) {
  Tensor t = Tensor::zeros(hist, 4);
  for (auto& v : t.values()) v = rng.uniform(0.0, 1.0);
  return t;
}

std::vector<WindowSample> windows(std::size_t n, Rng& rng) {
  std::vector<WindowSample> out(n);
  for (auto& w : out) {
    w.seq_id = "s";
    w.boxes = history(8, rng);
    for (int i = 0; i < 13; ++i) w.labels.push_back(static_cast<int>(rng.below(32)));
  }
  return out;
}

// Single-sample inference, the latency the complexity table reports.
void BM_InferFlow(benchmark::State& state) {
  FlowPredictor model(ModelConfig{}, config_a(), LossWeights{}, 1);
  Rng rng(1);
  const Tensor h = history(8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(infer(model, h).beams.data());
  state.counters["params"] = static_cast<double>(model.param_count());
}
BENCHMARK(BM_InferFlow)->Unit(benchmark::kMicrosecond);

void BM_InferRecurrent(benchmark::State& state) {
  RecurrentConfig cfg;
  cfg.cell = state.range(0) == 0 ? CellType::elman : CellType::lstm;
  RecurrentPredictor model(cfg, config_a(), 1);
  Rng rng(1);
  const Tensor h = history(8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(infer(model, h).beams.data());
  state.counters["params"] = static_cast<double>(model.param_count());
  state.SetLabel(model.kind());
}
BENCHMARK(BM_InferRecurrent)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

// One Adam step on a batch of 32.
void BM_TrainStepFlow(benchmark::State& state) {
  FlowPredictor model(ModelConfig{}, config_a(), LossWeights{}, 1);
  Rng rng(2);
  const auto data = windows(32, rng);
  TrainConfig cfg;
  cfg.epochs = 1;
  Trainer trainer(model, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_epoch(data, 0).total);
}
BENCHMARK(BM_TrainStepFlow)->Unit(benchmark::kMillisecond);

}  // namespace
