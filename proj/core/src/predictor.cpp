#include "fmbeam/predictor.hpp"

#include <numeric>

#include "fmbeam/baselines.hpp"
#include "fmbeam/checkpoint.hpp"
#include "fmbeam/errors.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam {

std::vector<int> Batch::labels_at(std::size_t i) const {
  std::vector<int> out(size);
  for (std::size_t b = 0; b < size; ++b) out[b] = label(b, i);
  return out;
}

Batch make_batch(std::span<const WindowSample> samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("cannot build an empty batch");
  const WindowSample& first = samples[indices.front()];
  Batch batch;
  batch.size = indices.size();
  batch.hist = first.boxes.rows();
  batch.pred = first.labels.size() - batch.hist;
  batch.boxes = Tensor::zeros(batch.size * batch.hist, 4);
  batch.labels.reserve(batch.size * batch.total());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const WindowSample& s = samples[indices[b]];
    if (s.boxes.rows() != batch.hist || s.boxes.cols() != 4 || s.labels.size() != batch.total()) {
      throw ShapeError("window " + s.seq_id + "@" + std::to_string(s.anchor) +
                       " does not match the batch's window shape");
    }
    std::copy(s.boxes.values().begin(), s.boxes.values().end(),
              batch.boxes.values().begin() + static_cast<std::ptrdiff_t>(b * batch.hist * 4));
    batch.labels.insert(batch.labels.end(), s.labels.begin(), s.labels.end());
  }
  return batch;
}

Batch make_batch(std::span<const WindowSample> samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(samples, idx);
}

std::unique_ptr<Predictor> make_predictor(const nlohmann::json& cfg) {
  StrictObject o(cfg, "predictor");
  std::string kind;
  std::uint64_t seed = 0;
  o.read("kind", kind).read("init_seed", seed);
  const nlohmann::json* window = o.child("window");
  if (window == nullptr) throw ConfigError("predictor config lacks 'window'");
  const WindowConfig w = window_from_json(*window);
  if (kind == "fm") {
    const nlohmann::json* model = o.child("model");
    const nlohmann::json* weights = o.child("weights");
    o.finish();
    ModelConfig mc = model != nullptr ? model_config_from_json(*model) : ModelConfig{};
    LossWeights lw;
    if (weights != nullptr) {
      StrictObject wo(*weights, "weights");
      wo.read("fm", lw.fm).read("term", lw.term).read("ce", lw.ce);
      wo.finish();
    }
    return std::make_unique<FlowPredictor>(mc, w, lw, seed);
  }
  if (kind == "rnn" || kind == "lstm") {
    const nlohmann::json* base = o.child("baseline");
    o.finish();
    RecurrentConfig rc = base != nullptr ? recurrent_config_from_json(*base) : RecurrentConfig{};
    if (cell_name(rc.cell) != kind) throw ConfigError("predictor kind and baseline.cell disagree");
    return std::make_unique<RecurrentPredictor>(rc, w, seed);
  }
  throw ConfigError("unknown model kind '" + kind + "' (expected fm, rnn or lstm)");
}

void save_predictor(const std::filesystem::path& path, const Predictor& model) {
  Checkpoint ckpt;
  ckpt.config_json = nlohmann::json{{"predictor", model.config_json()}}.dump();
  store_params(ckpt, model.params());
  save_checkpoint(path, ckpt);
}

std::unique_ptr<Predictor> load_predictor(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ckpt.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": checkpoint config is not valid JSON: " + e.what());
  }
  if (!cfg.contains("predictor")) throw DataError(path.string() + ": checkpoint has no predictor config");
  auto model = make_predictor(cfg["predictor"]);
  restore_params(ckpt, model->params());
  return model;
}

}  // namespace fmbeam
