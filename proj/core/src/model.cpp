#include "fmbeam/model.hpp"

#include <cmath>

#include "fmbeam/errors.hpp"
#include "fmbeam/json_util.hpp"
#include "fmbeam/rng.hpp"

namespace fmbeam {

std::string cond_encoder_name(CondEncoder e) {
  switch (e) {
    case CondEncoder::transformer:
      return "transformer";
    case CondEncoder::lstm:
      return "lstm";
    case CondEncoder::rnn:
      return "rnn";
  }
  return "transformer";
}

CondEncoder parse_cond_encoder(const std::string& name) {
  if (name == "transformer") return CondEncoder::transformer;
  if (name == "lstm") return CondEncoder::lstm;
  if (name == "rnn") return CondEncoder::rnn;
  throw ConfigError("unknown condition encoder '" + name + "'");
}

void ModelConfig::validate() const {
  if (beams < 2) throw ConfigError("model.beams must be >= 2");
  for (auto d : box_hidden) {
    if (d == 0) throw ConfigError("model.box_hidden dims must be >= 1");
  }
  for (auto d : field_hidden) {
    if (d == 0) throw ConfigError("model.field_hidden dims must be >= 1");
  }
  if (cond == CondEncoder::transformer) {
    if (cond_heads == 0 || condition_dim() % cond_heads != 0) {
      throw ConfigError("model.cond_dim " + std::to_string(condition_dim()) +
                        " is not divisible by cond_heads " + std::to_string(cond_heads));
    }
    if (ff_dim() == 0) throw ConfigError("model.cond_ff must be >= 1");
  }
  if (tau_embedding && (tau_features == 0 || tau_features % 2 != 0)) {
    throw ConfigError("model.tau_features must be a positive even number");
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"beams", cfg.beams},
          {"box_hidden", cfg.box_hidden},
          {"cond", cond_encoder_name(cfg.cond)},
          {"cond_layers", cfg.cond_layers},
          {"cond_heads", cfg.cond_heads},
          {"cond_dim", cfg.condition_dim()},
          {"cond_ff", cfg.ff_dim()},
          {"field_hidden", cfg.field_hidden},
          {"activation", activation_name(cfg.activation)},
          {"tau_embedding", cfg.tau_embedding},
          {"tau_features", cfg.tau_features}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  StrictObject o(j, "model");
  std::string cond = cond_encoder_name(cfg.cond);
  std::string act = activation_name(cfg.activation);
  o.read("beams", cfg.beams)
      .read("box_hidden", cfg.box_hidden)
      .read("cond", cond)
      .read("cond_layers", cfg.cond_layers)
      .read("cond_heads", cfg.cond_heads)
      .read("cond_dim", cfg.cond_dim)
      .read("cond_ff", cfg.cond_ff)
      .read("field_hidden", cfg.field_hidden)
      .read("activation", act)
      .read("tau_embedding", cfg.tau_embedding)
      .read("tau_features", cfg.tau_features);
  o.finish();
  cfg.cond = parse_cond_encoder(cond);
  cfg.activation = parse_activation(act);
  cfg.validate();
  return cfg;
}

namespace {

std::vector<std::size_t> dims(std::size_t in, const std::vector<std::size_t>& hidden,
                              std::size_t out) {
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

}  // namespace

FlowNetworks::FlowNetworks(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(init_seed);
  const std::size_t m = cfg_.beams;
  const std::size_t d = cfg_.condition_dim();
  box_ = Mlp::create(params_, "g_box", dims(4, cfg_.box_hidden, m), cfg_.activation, rng);
  switch (cfg_.cond) {
    case CondEncoder::transformer:
      transformer_ = TransformerEncoder::create(params_, "f_cond", m, d, cfg_.cond_layers,
                                                cfg_.cond_heads, cfg_.ff_dim(), cfg_.activation,
                                                rng);
      break;
    case CondEncoder::lstm:
      cond_cell_ = RecurrentCell::create(params_, "f_cond.lstm", CellType::lstm, m, d, rng);
      break;
    case CondEncoder::rnn:
      cond_cell_ = RecurrentCell::create(params_, "f_cond.rnn", CellType::elman, m, d, rng);
      break;
  }
  field_ = Mlp::create(params_, "u_theta", dims(cfg_.field_input_dim(), cfg_.field_hidden, m),
                       cfg_.activation, rng);
}

FlowNetworks::FlowNetworks(const FlowNetworks& other)
    : cfg_(other.cfg_),
      params_(other.params_),
      box_(other.box_),
      transformer_(other.transformer_),
      cond_cell_(other.cond_cell_),
      field_(other.field_) {}

Var FlowNetworks::box_embed(Tape& tape, Var boxes) const {
  if (tape.value(boxes).cols() != 4) {
    throw ShapeError("g_box expects 4 box coordinates per row, got " +
                     tape.value(boxes).shape_string());
  }
  return box_(tape, boxes);
}

Var FlowNetworks::condition(Tape& tape, Var features, std::size_t batch, std::size_t hist) const {
  const Tensor& f = tape.value(features);
  if (hist == 0) throw ShapeError("condition encoder needs a non-empty history");
  if (f.cols() != cfg_.beams || f.rows() != batch * hist) {
    throw ShapeError("f_cond expects " + std::to_string(batch * hist) + "x" +
                     std::to_string(cfg_.beams) + " features, got " + f.shape_string());
  }
  if (cfg_.cond == CondEncoder::transformer) return transformer_(tape, features, batch, hist);
  return run_sequence(tape, cond_cell_, features, batch, hist);
}

Var FlowNetworks::velocity(Tape& tape, Var z, Var tau, Var c) const {
  const Tensor& zv = tape.value(z);
  const Tensor& tv = tape.value(tau);
  const Tensor& cv = tape.value(c);
  const std::size_t b = zv.rows();
  if (zv.cols() != cfg_.beams || tv.rows() != b || tv.cols() != 1 || cv.rows() != b ||
      cv.cols() != cfg_.condition_dim()) {
    throw ShapeError("u_theta expects z " + std::to_string(b) + "x" + std::to_string(cfg_.beams) +
                     ", tau " + std::to_string(b) + "x1, c " + std::to_string(b) + "x" +
                     std::to_string(cfg_.condition_dim()) + "; got " + zv.shape_string() + ", " +
                     tv.shape_string() + ", " + cv.shape_string());
  }
  Var t = cfg_.tau_embedding ? tape.constant(tau_features(tv, cfg_.tau_features)) : tau;
  const Var parts[] = {z, t, c};
  field_evals_.fetch_add(1, std::memory_order_relaxed);
  return field_(tape, concat_cols(parts));
}

std::size_t FlowNetworks::param_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) n += p.value.size();
  }
  return n;
}

Tensor tau_features(const Tensor& tau, std::size_t features) {
  Tensor out = Tensor::zeros(tau.rows(), features);
  const std::size_t half = features / 2;
  for (std::size_t r = 0; r < tau.rows(); ++r) {
    for (std::size_t k = 0; k < half; ++k) {
      const double w = std::pow(2.0, static_cast<double>(k)) * M_PI;
      out(r, 2 * k) = std::sin(w * tau[r]);
      out(r, 2 * k + 1) = std::cos(w * tau[r]);
    }
  }
  return out;
}

}  // namespace fmbeam
