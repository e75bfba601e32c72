#include "fmbeam/nn.hpp"

#include <array>
#include <cmath>

#include "fmbeam/errors.hpp"
#include "fmbeam/init.hpp"

namespace fmbeam {

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::relu:
      return relu(x);
    case Activation::tanh:
      return tanh(x);
  }
  return x;
}

std::string activation_name(Activation act) { return act == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

Linear Linear::create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                      Rng& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = ps.add(name + ".weight", init_params({in, out}, rng, InitScheme::uniform_fan_in));
  l.bias = ps.add(name + ".bias", init_params({1, out}, rng, InitScheme::zeros));
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  return add_row(matmul(x, tape.param(weight)), tape.param(bias));
}

Mlp Mlp::create(ParamStore& ps, const std::string& name, const std::vector<std::size_t>& dims,
                Activation act, Rng& rng) {
  if (dims.size() < 2) throw ConfigError(name + ": an MLP needs at least input and output dims");
  Mlp m;
  m.act = act;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    m.layers.push_back(
        Linear::create(ps, name + ".layer" + std::to_string(i), dims[i], dims[i + 1], rng));
  }
  return m;
}

Var Mlp::operator()(Tape& tape, Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](tape, x);
    if (i + 1 < layers.size()) x = activate(x, act);
  }
  return x;
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, std::size_t dim) {
  Rng unused(0);
  LayerNorm n;
  n.gamma = ps.add(name + ".gamma", init_params({1, dim}, unused, InitScheme::ones));
  n.beta = ps.add(name + ".beta", init_params({1, dim}, unused, InitScheme::zeros));
  return n;
}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return layer_norm(x, tape.param(gamma), tape.param(beta));
}

TransformerLayer TransformerLayer::create(ParamStore& ps, const std::string& name, std::size_t dim,
                                          std::size_t heads, std::size_t ff_dim, Activation act,
                                          Rng& rng) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(name + ": model dim " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  TransformerLayer l;
  l.dim = dim;
  l.heads = heads;
  l.act = act;
  l.norm1 = LayerNorm::create(ps, name + ".norm1", dim);
  l.qkv = Linear::create(ps, name + ".qkv", dim, 3 * dim, rng);
  l.proj = Linear::create(ps, name + ".proj", dim, dim, rng);
  l.norm2 = LayerNorm::create(ps, name + ".norm2", dim);
  l.ff1 = Linear::create(ps, name + ".ff1", dim, ff_dim, rng);
  l.ff2 = Linear::create(ps, name + ".ff2", ff_dim, dim, rng);
  return l;
}

Var TransformerLayer::operator()(Tape& tape, Var x, std::size_t batch, std::size_t seq) const {
  Var qkv_out = qkv(tape, norm1(tape, x));
  Var q = slice_cols(qkv_out, 0, dim);
  Var k = slice_cols(qkv_out, dim, dim);
  Var v = slice_cols(qkv_out, 2 * dim, dim);
  x = add(x, proj(tape, attention(q, k, v, batch, seq, heads)));
  Var h = ff2(tape, activate(ff1(tape, norm2(tape, x)), act));
  return add(x, h);
}

Tensor sinusoidal_encoding(std::size_t seq, std::size_t dim) {
  Tensor pe = Tensor::zeros(seq, dim);
  for (std::size_t pos = 0; pos < seq; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * freq;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

TransformerEncoder TransformerEncoder::create(ParamStore& ps, const std::string& name,
                                              std::size_t in, std::size_t dim,
                                              std::size_t n_layers, std::size_t heads,
                                              std::size_t ff_dim, Activation act, Rng& rng) {
  TransformerEncoder e;
  e.dim = dim;
  e.input = Linear::create(ps, name + ".input", in, dim, rng);
  for (std::size_t i = 0; i < n_layers; ++i) {
    e.layers.push_back(TransformerLayer::create(ps, name + ".layer" + std::to_string(i), dim, heads,
                                                ff_dim, act, rng));
  }
  e.final_norm = LayerNorm::create(ps, name + ".final_norm", dim);
  return e;
}

Var TransformerEncoder::operator()(Tape& tape, Var x, std::size_t batch, std::size_t seq) const {
  if (seq == 0) throw ShapeError("condition encoder needs a non-empty history");
  const Tensor pe = sinusoidal_encoding(seq, dim);
  Tensor tiled = Tensor::zeros(batch * seq, dim);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < seq; ++s) {
      for (std::size_t c = 0; c < dim; ++c) tiled(b * seq + s, c) = pe(s, c);
    }
  }
  Var h = add(input(tape, x), tape.constant(std::move(tiled)));
  for (const auto& layer : layers) h = layer(tape, h, batch, seq);
  return mean_pool(final_norm(tape, h), seq);
}

std::string cell_name(CellType c) { return c == CellType::elman ? "rnn" : "lstm"; }

CellType parse_cell(const std::string& name) {
  if (name == "rnn" || name == "elman") return CellType::elman;
  if (name == "lstm") return CellType::lstm;
  throw ConfigError("unknown recurrent cell '" + name + "'");
}

RecurrentCell RecurrentCell::create(ParamStore& ps, const std::string& name, CellType type,
                                    std::size_t in, std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw ConfigError(name + ": hidden size must be >= 1");
  RecurrentCell c;
  c.type = type;
  c.in = in;
  c.hidden = hidden;
  const std::size_t gates = type == CellType::lstm ? 4 : 1;
  c.input = Linear::create(ps, name + ".input", in, gates * hidden, rng);
  c.recurrent =
      ps.add(name + ".recurrent", init_params({hidden, gates * hidden}, rng, InitScheme::uniform_fan_in));
  return c;
}

RecurrentCell::State RecurrentCell::initial(Tape& tape, std::size_t batch) const {
  State s;
  s.h = tape.constant(Tensor::zeros(batch, hidden));
  if (type == CellType::lstm) s.c = tape.constant(Tensor::zeros(batch, hidden));
  return s;
}

RecurrentCell::State RecurrentCell::step(Tape& tape, Var x, const State& s) const {
  Var pre = add(input(tape, x), matmul(s.h, tape.param(recurrent)));
  State next;
  if (type == CellType::elman) {
    next.h = tanh(pre);
    return next;
  }
  Var i = sigmoid(slice_cols(pre, 0, hidden));
  Var f = sigmoid(slice_cols(pre, hidden, hidden));
  Var g = tanh(slice_cols(pre, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(pre, 3 * hidden, hidden));
  next.c = add(mul(f, s.c), mul(i, g));
  next.h = mul(o, tanh(next.c));
  return next;
}

Var time_step_rows(Var x, std::size_t batch, std::size_t seq, std::size_t t) {
  std::vector<std::size_t> rows(batch);
  for (std::size_t b = 0; b < batch; ++b) rows[b] = b * seq + t;
  return select_rows(x, rows);
}

Var run_sequence(Tape& tape, const RecurrentCell& cell, Var x, std::size_t batch, std::size_t seq) {
  if (seq == 0) throw ShapeError("recurrent encoder needs a non-empty sequence");
  auto state = cell.initial(tape, batch);
  for (std::size_t t = 0; t < seq; ++t) {
    state = cell.step(tape, time_step_rows(x, batch, seq, t), state);
  }
  return state.h;
}

}  // namespace fmbeam
