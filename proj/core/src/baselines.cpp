#include "fmbeam/baselines.hpp"

#include "fmbeam/errors.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam {

std::size_t RecurrentConfig::hidden_size() const noexcept {
  if (hidden != 0) return hidden;
  return cell == CellType::elman ? 140 : 144;
}

void RecurrentConfig::validate() const {
  if (beams < 2) throw ConfigError("baseline beams must be >= 2");
  if (hidden_size() < 1) throw ConfigError("baseline hidden size must be >= 1");
}

nlohmann::json to_json(const RecurrentConfig& cfg) {
  return {{"cell", cell_name(cfg.cell)},
          {"beams", cfg.beams},
          {"hidden", cfg.hidden_size()},
          {"decode", cfg.decode == DecodeMode::direct ? "direct" : "autoregressive"}};
}

RecurrentConfig recurrent_config_from_json(const nlohmann::json& j) {
  RecurrentConfig cfg;
  StrictObject o(j, "baseline");
  std::string cell = cell_name(cfg.cell);
  std::string decode = "autoregressive";
  o.read("cell", cell).read("beams", cfg.beams).read("hidden", cfg.hidden).read("decode", decode);
  o.finish();
  cfg.cell = parse_cell(cell);
  if (decode == "autoregressive") {
    cfg.decode = DecodeMode::autoregressive;
  } else if (decode == "direct") {
    cfg.decode = DecodeMode::direct;
  } else {
    throw ConfigError("unknown decode mode '" + decode + "'");
  }
  cfg.validate();
  return cfg;
}

RecurrentPredictor::RecurrentPredictor(const RecurrentConfig& cfg, const WindowConfig& window,
                                       std::uint64_t init_seed)
    : cfg_(cfg), window_(window), init_seed_(init_seed) {
  cfg_.validate();
  window_.validate();
  Rng rng(init_seed);
  const std::string name = cell_name(cfg_.cell);
  cell_ = RecurrentCell::create(params_, name + ".cell", cfg_.cell, cfg_.input_dim(),
                                cfg_.hidden_size(), rng);
  const std::size_t out =
      cfg_.decode == DecodeMode::direct ? window_.pred * cfg_.beams : cfg_.beams;
  head_ = Linear::create(params_, name + ".head", cfg_.hidden_size(), out, rng);
}

std::vector<Var> RecurrentPredictor::forward(Tape& tape, const Batch& batch) const {
  if (batch.size == 0) throw DataError("empty batch");
  if (batch.hist != window_.hist || batch.pred != window_.pred) {
    throw ShapeError("batch window does not match model window " + window_.name());
  }
  if (batch.boxes.cols() != 4) throw ShapeError("baseline expects 4 box coordinates per row");
  const std::size_t b = batch.size;
  const std::size_t m = cfg_.beams;
  Var boxes = tape.constant(batch.boxes);
  Var no_feedback = tape.constant(Tensor::zeros(b, m));
  auto state = cell_.initial(tape, b);
  for (std::size_t t = 0; t < batch.hist; ++t) {
    const Var parts[] = {time_step_rows(boxes, b, batch.hist, t), no_feedback};
    state = cell_.step(tape, concat_cols(parts), state);
  }

  std::vector<Var> probs;
  if (cfg_.decode == DecodeMode::direct) {
    Var logits = head_(tape, state.h);
    for (std::size_t t = 0; t < window_.pred; ++t) {
      probs.push_back(softmax_rows(slice_cols(logits, t * m, m)));
    }
    return probs;
  }
  Var no_box = tape.constant(Tensor::zeros(b, 4));
  probs.push_back(softmax_rows(head_(tape, state.h)));
  for (std::size_t t = 1; t < window_.pred; ++t) {
    const Var parts[] = {no_box, probs.back()};
    state = cell_.step(tape, concat_cols(parts), state);
    probs.push_back(softmax_rows(head_(tape, state.h)));
  }
  return probs;
}

LossTerms RecurrentPredictor::loss(Tape& tape, const Batch& batch, Rng&) const {
  auto probs = forward(tape, batch);
  std::vector<std::vector<int>> labels;
  for (std::size_t t = 0; t < window_.pred; ++t) labels.push_back(batch.labels_at(window_.hist + t));
  LossTerms out;
  out.objective = ce_loss(probs, labels);
  out.values.ce = tape.value(out.objective).item();
  out.values.total = out.values.ce;
  return out;
}

std::vector<Tensor> RecurrentPredictor::predict(const Batch& batch) const {
  Tape tape(&params_, false);
  std::vector<Tensor> out;
  for (Var p : forward(tape, batch)) out.push_back(tape.value(p));
  return out;
}

nlohmann::json RecurrentPredictor::config_json() const {
  return {{"kind", kind()},
          {"baseline", to_json(cfg_)},
          {"window", to_json(window_)},
          {"init_seed", init_seed_}};
}

}  // namespace fmbeam
