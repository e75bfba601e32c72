#include "run_config.hpp"

#include <fstream>

#include "fmbeam/errors.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam::cli {

WindowConfig DataSection::window() const {
  WindowConfig w = window_variant(variant);
  w.stride = stride;
  return w;
}

void RunConfig::validate() const {
  simulator.validate();
  data.window().validate();
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must be in (0, 1)");
  }
  if (data.sequences < 2) throw ConfigError("data.sequences must be >= 2");
  model.validate();
  if (model.beams != simulator.sim.beams) {
    throw ConfigError("model.beams (" + std::to_string(model.beams) +
                      ") differs from simulator.beams (" + std::to_string(simulator.sim.beams) + ")");
  }
  rnn.validate();
  lstm.validate();
  if (rnn.cell != CellType::elman) throw ConfigError("rnn.cell must be rnn");
  if (lstm.cell != CellType::lstm) throw ConfigError("lstm.cell must be lstm");
  if (rnn.beams != model.beams || lstm.beams != model.beams) {
    throw ConfigError("baseline beams must equal model.beams");
  }
  training.validate();
  if (eval.ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (auto k : eval.ks) {
    if (k < 1 || k > model.beams) throw ConfigError("eval.ks entries must be in [1, M]");
  }
  if (eval.bench_samples < 1000) throw ConfigError("eval.bench_samples must be >= 1000");
  if (eval.bench_warmup < 100) throw ConfigError("eval.bench_warmup must be >= 100");
}

std::string RunConfig::fingerprint() const { return fmbeam::fingerprint(to_json(*this).dump()); }

std::uint64_t derive_seed(std::uint64_t root, SeedStream stream) {
  return Rng(root).fork(static_cast<std::uint64_t>(stream)).next_u64();
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {{"seed", cfg.seed},
          {"simulator", to_json(cfg.simulator)},
          {"data",
           {{"sequences", cfg.data.sequences},
            {"variant", cfg.data.variant},
            {"test_fraction", cfg.data.test_fraction},
            {"stride", cfg.data.stride},
            {"beam_base", cfg.data.beam_base}}},
          {"model", to_json(cfg.model)},
          {"rnn", to_json(cfg.rnn)},
          {"lstm", to_json(cfg.lstm)},
          {"training", to_json(cfg.training)},
          {"eval",
           {{"ks", cfg.eval.ks},
            {"bench_samples", cfg.eval.bench_samples},
            {"bench_warmup", cfg.eval.bench_warmup}}},
          {"out", cfg.out}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  StrictObject o(j, "");
  o.read("seed", cfg.seed).read("out", cfg.out);
  if (const auto* s = o.child("simulator")) cfg.simulator = scenario_from_json(*s);
  if (const auto* d = o.child("data")) {
    StrictObject od(*d, "data");
    od.read("sequences", cfg.data.sequences)
        .read("variant", cfg.data.variant)
        .read("test_fraction", cfg.data.test_fraction)
        .read("stride", cfg.data.stride)
        .read("beam_base", cfg.data.beam_base);
    od.finish();
  }
  if (const auto* m = o.child("model")) cfg.model = model_config_from_json(*m);
  if (const auto* r = o.child("rnn")) {
    nlohmann::json rj = *r;
    if (!rj.contains("cell")) rj["cell"] = "rnn";
    cfg.rnn = recurrent_config_from_json(rj);
  }
  if (const auto* l = o.child("lstm")) {
    nlohmann::json lj = *l;
    if (!lj.contains("cell")) lj["cell"] = "lstm";
    cfg.lstm = recurrent_config_from_json(lj);
  }
  if (const auto* t = o.child("training")) cfg.training = train_config_from_json(*t);
  if (const auto* e = o.child("eval")) {
    StrictObject oe(*e, "eval");
    oe.read("ks", cfg.eval.ks)
        .read("bench_samples", cfg.eval.bench_samples)
        .read("bench_warmup", cfg.eval.bench_warmup);
    oe.finish();
  }
  o.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace fmbeam::cli
