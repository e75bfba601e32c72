#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>

#include "fmbeam/baselines.hpp"
#include "fmbeam/errors.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/frame_io.hpp"

namespace fmbeam::cli {

namespace fs = std::filesystem;

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config ? load_run_config(*opts.config) : RunConfig{};
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') cfg.out = env;
  if (opts.out) cfg.out = *opts.out;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.variant) cfg.data.variant = *opts.variant;
  if (!opts.ks.empty()) cfg.eval.ks = opts.ks;
  cfg.validate();
  return cfg;
}

namespace {

TrainConfig effective_training(const RunConfig& cfg) {
  TrainConfig t = cfg.training;
  t.seed = splitmix64(derive_seed(cfg.seed, SeedStream::train) ^ cfg.training.seed);
  return t;
}

std::unique_ptr<Predictor> build_model(const RunConfig& cfg, const std::string& kind) {
  const WindowConfig w = cfg.data.window();
  const std::uint64_t init = derive_seed(cfg.seed, SeedStream::init);
  if (kind == "fm") return std::make_unique<FlowPredictor>(cfg.model, w, LossWeights{}, init);
  if (kind == "rnn") return std::make_unique<RecurrentPredictor>(cfg.rnn, w, init);
  if (kind == "lstm") return std::make_unique<RecurrentPredictor>(cfg.lstm, w, init);
  throw ConfigError("unknown model '" + kind + "' (expected fm, rnn or lstm)");
}

FrameSet load_dataset(const RunConfig& cfg, const fs::path& data, std::size_t beams) {
  FrameSet set = load_frames(data, cfg.data.beam_base);
  if (set.header.beams != beams) {
    throw ConfigError("model expects M=" + std::to_string(beams) + " beams but dataset " +
                      data.string() + " has M=" + std::to_string(set.header.beams));
  }
  return set;
}

SequenceSplit resolve_split(const RunConfig& cfg, const FrameSet& set,
                            const std::optional<fs::path>& manifest) {
  if (manifest) return load_split_manifest(*manifest);
  Rng rng(derive_seed(cfg.seed, SeedStream::split));
  return split_sequences(set.sequences, cfg.data.test_fraction, rng);
}

std::string split_fingerprint(const FrameSet& set, const SequenceSplit& split) {
  std::string text = set.header.config_hash + "|";
  for (const auto& s : split.train_ids) text += s + ",";
  text += "|";
  for (const auto& s : split.test_ids) text += s + ",";
  return fingerprint(text);
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

SimulateResult cmd_simulate(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  Rng rng(derive_seed(cfg.seed, SeedStream::simulate));
  SimulateResult r;
  r.file = fs::path(cfg.out) / "frames.csv";
  const Dataset ds = generate_dataset(cfg.data.sequences, cfg.simulator, rng, r.file);
  r.records = ds.frames.size();
  r.sequences = group_frames(ds).sequences.size();
  r.hash = ds.header.config_hash;
  write_json(fs::path(cfg.out) / "simulate.json",
             {{"config_fingerprint", cfg.fingerprint()},
              {"dataset_hash", r.hash},
              {"records", r.records},
              {"sequences", r.sequences},
              {"config", to_json(cfg)}});
  return r;
}

TrainResult cmd_train(const RunConfig& cfg, const TrainRequest& req, const Log& log) {
  auto model = build_model(cfg, req.model);
  const FrameSet set = load_dataset(cfg, req.data, model->beams());
  const SequenceSplit split = resolve_split(cfg, set, req.split);
  const DatasetSplit data = build_split(set.sequences, split, model->window());

  TrainResult r;
  r.dir = fs::path(cfg.out) / (req.model + "-" + model->window().name());
  fs::create_directories(r.dir);
  save_split_manifest(r.dir / "split.json", split);
  write_json(r.dir / "run.json", {{"config_fingerprint", cfg.fingerprint()},
                                  {"dataset_hash", set.header.config_hash},
                                  {"split_fingerprint", split_fingerprint(set, split)},
                                  {"config", to_json(cfg)}});
  r.train_windows = data.train.size();
  r.param_count = model->param_count();

  Trainer trainer(*model, effective_training(cfg));
  if (req.resume) trainer.resume(*req.resume);
  if (log) {
    log(req.model + ": " + std::to_string(r.param_count) + " parameters, " +
        std::to_string(data.train.size()) + " training windows");
  }
  const std::size_t total = cfg.training.epochs;
  r.history = trainer.fit(data.train, r.dir, req.until, [&](const EpochRecord& e) {
    if (log) {
      log("epoch " + std::to_string(e.epoch) + "/" + std::to_string(total) +
          " L_FM=" + fmt(e.loss.fm) + " L_Term=" + fmt(e.loss.term) + " L_CE=" + fmt(e.loss.ce) +
          " L_total=" + fmt(e.loss.total));
    }
  });
  r.checkpoint = r.dir / "model.ckpt";
  return r;
}

MetricsReport cmd_eval(const RunConfig& cfg, const EvalRequest& req) {
  auto model = load_predictor(req.checkpoint);
  const FrameSet set = load_dataset(cfg, req.data, model->beams());
  const fs::path manifest = req.split ? *req.split : req.checkpoint.parent_path() / "split.json";
  if (!fs::exists(manifest)) throw DataError("split manifest " + manifest.string() + " not found");
  const SequenceSplit split = load_split_manifest(manifest);
  const DatasetSplit data = build_split(set.sequences, split, model->window());

  MetricsReport report = evaluate(*model, data.test, cfg.eval.ks, split_fingerprint(set, split));
  const fs::path dir = fs::path(cfg.out) / ("eval-" + model->kind() + "-" + model->window().name());
  emit_report(dir, std::span<const MetricsReport>(&report, 1),
              {{"config_fingerprint", cfg.fingerprint()},
               {"dataset_hash", set.header.config_hash},
               {"param_counts", {{model->kind(), model->param_count()}}}});
  return report;
}

AblationGrid cmd_ablate(const RunConfig& cfg, const fs::path& data, const Log& log) {
  const FrameSet set = load_dataset(cfg, data, cfg.model.beams);
  const SequenceSplit split = resolve_split(cfg, set, std::nullopt);
  AblationSetup setup;
  setup.model = cfg.model;
  setup.train = effective_training(cfg);
  setup.ks = cfg.eval.ks;
  setup.init_seed = derive_seed(cfg.seed, SeedStream::init);
  setup.data_fingerprint = set.header.config_hash;
  for (auto& w : setup.windows) w.stride = cfg.data.stride;

  AblationGrid grid = run_ablation(set.sequences, split, setup,
                                   [&](const std::string& v, const std::string& c,
                                       const MetricsReport& r) {
                                     if (!log) return;
                                     std::string line = v + " / " + c + ":";
                                     for (std::size_t i = 0; i < r.ks.size(); ++i) {
                                       line += " ACC" + std::to_string(r.ks[i]) + "=" +
                                               fmt(r.average[i], "%.4f");
                                     }
                                     log(line);
                                   });
  const fs::path dir = fs::path(cfg.out) / "ablation";
  fs::create_directories(dir);
  save_split_manifest(dir / "split.json", split);
  write_ablation_csv(dir / "ablation.csv", grid);
  nlohmann::json j = to_json(grid);
  j["config_fingerprint"] = cfg.fingerprint();
  write_json(dir / "ablation.json", j);
  if (grid.failure) std::rethrow_exception(grid.failure);
  return grid;
}

std::vector<BenchResult> cmd_bench(const RunConfig& cfg, const std::vector<fs::path>& checkpoints,
                                   const fs::path& data) {
  if (checkpoints.empty()) throw ConfigError("bench needs at least one checkpoint");
  std::vector<BenchResult> results;
  for (const auto& path : checkpoints) {
    auto model = load_predictor(path);
    const FrameSet set = load_dataset(cfg, data, model->beams());
    std::vector<WindowSample> windows;
    for (const auto& s : set.sequences) {
      auto w = make_windows(s, model->window());
      windows.insert(windows.end(), w.begin(), w.end());
    }
    results.push_back(
        bench_inference(*model, windows, cfg.eval.bench_samples, cfg.eval.bench_warmup));
  }
  const fs::path dir = fs::path(cfg.out) / "bench";
  fs::create_directories(dir);
  std::ofstream csv(dir / "bench.csv");
  csv << "model,params,samples,mean_s,median_s,p95_s,field_evals_per_sample,hardware\n";
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    csv << r.model << ',' << r.param_count << ',' << r.samples << ',' << fmt(r.mean_s, "%.9g")
        << ',' << fmt(r.median_s, "%.9g") << ',' << fmt(r.p95_s, "%.9g") << ','
        << r.field_evals_per_sample << ",\"" << r.hardware << "\"\n";
    j.push_back(to_json(r));
  }
  write_json(dir / "bench.json", {{"config_fingerprint", cfg.fingerprint()},
                                  {"threads", 1},
                                  {"results", j}});
  return results;
}

void print_bench_table(std::ostream& os, const std::vector<BenchResult>& results) {
  os << "single-threaded, batch size 1\n";
  os << std::left << std::setw(8) << "model" << std::right << std::setw(12) << "#params"
     << std::setw(14) << "median (s)" << std::setw(14) << "mean (s)" << std::setw(14)
     << "p95 (s)" << std::setw(10) << "samples" << '\n';
  for (const auto& r : results) {
    os << std::left << std::setw(8) << r.model << std::right << std::setw(12) << r.param_count
       << std::setw(14) << fmt(r.median_s, "%.3e") << std::setw(14) << fmt(r.mean_s, "%.3e")
       << std::setw(14) << fmt(r.p95_s, "%.3e") << std::setw(10) << r.samples << '\n';
  }
  if (!results.empty()) os << "hardware: " << results.front().hardware << '\n';
}

void print_ablation_table(std::ostream& os, const AblationGrid& grid) {
  os << std::left << std::setw(14) << "variant";
  for (const auto& c : grid.configs) {
    for (auto k : grid.ks) os << std::right << std::setw(10) << (c + " ACC" + std::to_string(k));
  }
  os << '\n';
  for (const auto& v : grid.variants) {
    os << std::left << std::setw(14) << v;
    for (const auto& c : grid.configs) {
      for (auto k : grid.ks) {
        const auto* cell = grid.find(v, c, k);
        os << std::right << std::setw(10) << (cell ? fmt(cell->acc, "%.4f") : std::string("-"));
      }
    }
    os << '\n';
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  if (dynamic_cast<const ShapeError*>(&e)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  return 1;
}

}  // namespace fmbeam::cli
