#include "fmbeam/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fmbeam/errors.hpp"
#include "fmbeam/simulator.hpp"

namespace fmbeam {

double acc_k(const Tensor& probs, std::span<const int> labels, std::size_t k) {
  const std::size_t m = probs.cols();
  if (k < 1 || k > m) {
    throw ConfigError("top-K needs 1 <= K <= " + std::to_string(m) + ", got K=" + std::to_string(k));
  }
  if (labels.size() != probs.rows()) {
    throw ShapeError("acc_k: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(probs.rows()) + " prediction rows");
  }
  if (labels.empty()) throw DataError("acc_k on an empty set");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row_span(r);
    const auto y = static_cast<std::size_t>(labels[r]);
    if (labels[r] < 0 || y >= m) throw DataError("label " + std::to_string(labels[r]) + " out of range");
    // Rank of the label under (value desc, index asc).
    std::size_t rank = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] > row[y] || (row[j] == row[y] && j < y)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double MetricsReport::at(std::size_t k, std::size_t step) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return per_step.at(i).at(step);
  }
  throw ConfigError("report has no K=" + std::to_string(k));
}

double MetricsReport::mean(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return average.at(i);
  }
  throw ConfigError("report has no K=" + std::to_string(k));
}

MetricsReport evaluate(const Predictor& model, std::span<const WindowSample> test,
                       const std::vector<std::size_t>& ks, const std::string& fingerprint,
                       std::size_t chunk) {
  if (test.empty()) throw DataError("test split is empty");
  if (ks.empty()) throw ConfigError("no K values to evaluate");
  const WindowConfig& w = model.window();
  const std::size_t m = model.beams();
  std::vector<Tensor> probs(w.pred, Tensor::zeros(test.size(), m));
  std::vector<std::vector<int>> labels(w.pred, std::vector<int>(test.size()));

  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t start = 0; start < test.size(); start += chunk) {
    const std::size_t n = std::min(chunk, test.size() - start);
    const Batch batch = make_batch(test.subspan(start, n));
    const auto steps = model.predict(batch);
    for (std::size_t t = 0; t < w.pred; ++t) {
      for (std::size_t b = 0; b < n; ++b) {
        auto src = steps[t].row_span(b);
        std::copy(src.begin(), src.end(), probs[t].row_span(start + b).begin());
        labels[t][start + b] = batch.label(b, w.hist + t);
      }
    }
  }

  MetricsReport r;
  r.model = model.kind();
  r.config = w.name();
  r.fingerprint = fingerprint;
  r.n_test = test.size();
  r.param_count = model.param_count();
  r.ks = ks;
  for (std::size_t k : ks) {
    std::vector<double> curve;
    double sum = 0.0;
    for (std::size_t t = 0; t < w.pred; ++t) {
      curve.push_back(acc_k(probs[t], labels[t], k));
      sum += curve.back();
    }
    r.per_step.push_back(curve);
    r.average.push_back(sum / static_cast<double>(w.pred));
  }
  return r;
}

std::vector<AblationVariant> ablation_variants() {
  return {{"Base", {1.0, 1.0, 1.0}, CondEncoder::transformer},
          {"w/o L_FM", {0.0, 1.0, 1.0}, CondEncoder::transformer},
          {"w/o L_Term", {1.0, 0.0, 1.0}, CondEncoder::transformer},
          {"LSTM cond.", {1.0, 1.0, 1.0}, CondEncoder::lstm},
          {"RNN cond.", {1.0, 1.0, 1.0}, CondEncoder::rnn}};
}

const AblationCell* AblationGrid::find(const std::string& variant, const std::string& config,
                                       std::size_t k) const {
  for (const auto& c : cells) {
    if (c.variant == variant && c.config == config && c.k == k) return &c;
  }
  return nullptr;
}

AblationGrid run_ablation(const std::vector<Sequence>& sequences, const SequenceSplit& split,
                          const AblationSetup& setup, const AblationProgress& progress) {
  AblationGrid grid;
  const auto variants = ablation_variants();
  for (const auto& v : variants) grid.variants.push_back(v.name);
  for (const auto& w : setup.windows) grid.configs.push_back(w.name());
  grid.ks = setup.ks;

  std::string ids;
  for (const auto& s : split.train_ids) ids += s + ",";
  ids += "|";
  for (const auto& s : split.test_ids) ids += s + ",";
  const std::string shared = fingerprint(setup.data_fingerprint + "|" + ids + "|" +
                                         to_json(setup.train).dump() + "|" +
                                         std::to_string(setup.init_seed));

  for (const auto& w : setup.windows) {
    const DatasetSplit data = build_split(sequences, split, w);
    for (const auto& v : variants) {
      try {
        ModelConfig mc = setup.model;
        mc.cond = v.cond;
        FlowPredictor model(mc, w, v.weights, setup.init_seed);
        Trainer trainer(model, setup.train);
        trainer.fit(data.train);
        const MetricsReport report = evaluate(model, data.test, setup.ks, shared);
        for (std::size_t i = 0; i < setup.ks.size(); ++i) {
          grid.cells.push_back({v.name, w.name(), setup.ks[i], report.average[i], shared});
        }
        if (progress) progress(v.name, w.name(), report);
      } catch (const std::exception& e) {
        grid.error = "ablation cell '" + v.name + "' / config " + w.name() + " failed: " + e.what();
        grid.failure = std::current_exception();
        return grid;
      }
    }
  }
  return grid;
}

double clock_tick_seconds() {
  using clock = std::chrono::steady_clock;
  auto best = clock::duration::max();
  for (int i = 0; i < 200; ++i) {
    const auto a = clock::now();
    auto b = clock::now();
    while (b == a) b = clock::now();
    best = std::min(best, b - a);
  }
  return std::chrono::duration<double>(best).count();
}

std::string hardware_descriptor() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) return line.substr(pos + 2) + ", 1 thread";
    }
  }
  return "unknown CPU, 1 thread";
}

BenchResult bench_inference(const Predictor& model, std::span<const WindowSample> inputs,
                            std::size_t samples, std::size_t warmup) {
  if (samples < 1000) throw ConfigError("benchmark needs at least 1000 timed samples");
  if (warmup < 100) throw ConfigError("benchmark needs at least 100 warmup samples");
  if (inputs.empty()) throw DataError("benchmark has no input windows");

  for (std::size_t i = 0; i < warmup; ++i) infer(model, inputs[i % inputs.size()].boxes);

  const auto* flow = dynamic_cast<const FlowPredictor*>(&model);
  const std::uint64_t evals_before = flow ? flow->networks().field_evaluations() : 0;
  using clock = std::chrono::steady_clock;
  std::vector<double> times(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const Tensor& x = inputs[i % inputs.size()].boxes;
    const auto t0 = clock::now();
    infer(model, x);
    times[i] = std::chrono::duration<double>(clock::now() - t0).count();
  }

  BenchResult r;
  r.model = model.kind();
  r.param_count = model.param_count();
  r.samples = samples;
  r.hardware = hardware_descriptor();
  if (flow) {
    r.field_evals_per_sample =
        static_cast<double>(flow->networks().field_evaluations() - evals_before) /
        static_cast<double>(samples);
  }
  double sum = 0.0;
  for (double t : times) sum += t;
  r.mean_s = sum / static_cast<double>(samples);
  std::sort(times.begin(), times.end());
  r.median_s = times[samples / 2];
  r.p95_s = times[std::min(samples - 1, (samples * 95) / 100)];
  const double tick = clock_tick_seconds();
  if (r.median_s < 10.0 * tick) {
    throw Error("median latency " + std::to_string(r.median_s) + " s is under 10 clock ticks (" +
                std::to_string(tick) + " s); time batches of calls instead");
  }
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "model,config,step,K,acc\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
      for (std::size_t t = 0; t < r.per_step[i].size(); ++t) {
        out << r.model << ',' << r.config << ',' << t + 1 << ',' << r.ks[i] << ','
            << fmt(r.per_step[i][t]) << '\n';
      }
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "model,config,step,K,acc") throw DataError(path.string() + ":1: unexpected header");
  std::vector<MetricsReport> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string model, config, step_s, k_s, acc_s;
    if (!std::getline(ss, model, ',') || !std::getline(ss, config, ',') ||
        !std::getline(ss, step_s, ',') || !std::getline(ss, k_s, ',') || !std::getline(ss, acc_s)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed metrics row");
    }
    std::size_t step = 0, k = 0;
    double acc = 0.0;
    try {
      step = std::stoul(step_s);
      k = std::stoul(k_s);
      acc = std::stod(acc_s);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed metrics row");
    }
    if (step == 0) throw DataError(path.string() + ":" + std::to_string(lineno) + ": step is 1-based");
    auto [it, fresh] = index.try_emplace({model, config}, out.size());
    if (fresh) {
      out.emplace_back();
      out.back().model = model;
      out.back().config = config;
    }
    MetricsReport& r = out[it->second];
    auto kit = std::find(r.ks.begin(), r.ks.end(), k);
    std::size_t ki = static_cast<std::size_t>(kit - r.ks.begin());
    if (kit == r.ks.end()) {
      r.ks.push_back(k);
      r.per_step.emplace_back();
    }
    auto& curve = r.per_step[ki];
    if (curve.size() < step) curve.resize(step, 0.0);
    curve[step - 1] = acc;
  }
  for (auto& r : out) {
    for (const auto& curve : r.per_step) {
      double s = 0.0;
      for (double v : curve) s += v;
      r.average.push_back(s / static_cast<double>(curve.size()));
    }
  }
  return out;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const MetricsReport> reports) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  std::size_t steps = 0;
  out << "step";
  for (const auto& r : reports) {
    steps = std::max(steps, r.steps());
    for (std::size_t k : r.ks) out << ',' << r.model << '_' << r.config << "_ACC" << k;
  }
  out << '\n';
  for (std::size_t t = 0; t < steps; ++t) {
    out << t + 1;
    for (const auto& r : reports) {
      for (std::size_t i = 0; i < r.ks.size(); ++i) {
        out << ',';
        if (t < r.per_step[i].size()) out << fmt(r.per_step[i][t]);
      }
    }
    out << '\n';
  }
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json avg = nlohmann::json::object();
  nlohmann::json curves = nlohmann::json::object();
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    avg["ACC" + std::to_string(r.ks[i])] = r.average[i];
    curves["ACC" + std::to_string(r.ks[i])] = r.per_step[i];
  }
  return {{"model", r.model},         {"config", r.config},
          {"fingerprint", r.fingerprint}, {"n_test", r.n_test},
          {"param_count", r.param_count}, {"average", avg},
          {"per_step", curves}};
}

nlohmann::json to_json(const BenchResult& r) {
  return {{"model", r.model},
          {"param_count", r.param_count},
          {"samples", r.samples},
          {"mean_s", r.mean_s},
          {"median_s", r.median_s},
          {"p95_s", r.p95_s},
          {"field_evals_per_sample", r.field_evals_per_sample},
          {"hardware", r.hardware}};
}

nlohmann::json to_json(const AblationGrid& g) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : g.cells) {
    cells.push_back({{"variant", c.variant},
                     {"config", c.config},
                     {"K", c.k},
                     {"acc", c.acc},
                     {"fingerprint", c.fingerprint}});
  }
  nlohmann::json out = {{"variants", g.variants},
                        {"configs", g.configs},
                        {"ks", g.ks},
                        {"complete", g.complete()},
                        {"cells", cells}};
  if (!g.error.empty()) out["error"] = g.error;
  return out;
}

void write_ablation_csv(const std::filesystem::path& path, const AblationGrid& grid) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "variant";
  for (const auto& c : grid.configs) {
    for (std::size_t k : grid.ks) out << ',' << c << "_ACC" << k;
  }
  out << '\n';
  for (const auto& v : grid.variants) {
    out << v;
    for (const auto& c : grid.configs) {
      for (std::size_t k : grid.ks) {
        out << ',';
        if (const auto* cell = grid.find(v, c, k)) out << fmt(cell->acc);
      }
    }
    out << '\n';
  }
}

void emit_report(const std::filesystem::path& dir, std::span<const MetricsReport> reports,
                 const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  write_metrics_csv(dir / "metrics.csv", reports);
  write_curves_csv(dir / "curves.csv", reports);
  nlohmann::json summary = extra.is_object() ? extra : nlohmann::json::object();
  summary["reports"] = nlohmann::json::array();
  nlohmann::json counts = summary.value("param_counts", nlohmann::json::object());
  for (const auto& r : reports) {
    summary["reports"].push_back(to_json(r));
    counts[r.model] = r.param_count;
  }
  summary["param_counts"] = counts;
  std::ofstream out(dir / "summary.json");
  if (!out) throw Error("cannot write " + (dir / "summary.json").string());
  out << summary.dump(2) << '\n';
}

}  // namespace fmbeam
