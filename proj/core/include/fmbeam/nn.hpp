#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fmbeam/autograd.hpp"
#include "fmbeam/params.hpp"
#include "fmbeam/rng.hpp"

namespace fmbeam {

enum class Activation { relu, tanh };

Var activate(Var x, Activation act);
std::string activation_name(Activation act);
Activation parse_activation(const std::string& name);

// y = x W + b with W stored in x out.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                       Rng& rng);
  Var operator()(Tape& tape, Var x) const;
};

// Activation after every layer except the last.
struct Mlp {
  std::vector<Linear> layers;
  Activation act = Activation::relu;

  static Mlp create(ParamStore& ps, const std::string& name, const std::vector<std::size_t>& dims,
                    Activation act, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
  std::size_t in_dim() const { return layers.front().in; }
  std::size_t out_dim() const { return layers.back().out; }
};

struct LayerNorm {
  std::size_t gamma = 0;
  std::size_t beta = 0;

  static LayerNorm create(ParamStore& ps, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, Var x) const;
};

// Pre-norm block: x + MHA(LN(x)), then x + FF(LN(x)).
struct TransformerLayer {
  LayerNorm norm1;
  LayerNorm norm2;
  Linear qkv;
  Linear proj;
  Linear ff1;
  Linear ff2;
  std::size_t dim = 0;
  std::size_t heads = 1;
  Activation act = Activation::relu;

  static TransformerLayer create(ParamStore& ps, const std::string& name, std::size_t dim,
                                 std::size_t heads, std::size_t ff_dim, Activation act, Rng& rng);
  Var operator()(Tape& tape, Var x, std::size_t batch, std::size_t seq) const;
};

// seq x dim table, sin on even columns and cos on odd ones.
Tensor sinusoidal_encoding(std::size_t seq, std::size_t dim);

/// Projects each token to `dim`, adds sinusoidal positions, runs the layer
/// stack and a final LayerNorm, then mean-pools over time.
struct TransformerEncoder {
  Linear input;
  std::vector<TransformerLayer> layers;
  LayerNorm final_norm;
  std::size_t dim = 0;

  static TransformerEncoder create(ParamStore& ps, const std::string& name, std::size_t in,
                                   std::size_t dim, std::size_t n_layers, std::size_t heads,
                                   std::size_t ff_dim, Activation act, Rng& rng);
  // x: (batch*seq) x in  ->  batch x dim
  Var operator()(Tape& tape, Var x, std::size_t batch, std::size_t seq) const;
};

enum class CellType { elman, lstm };

std::string cell_name(CellType c);
CellType parse_cell(const std::string& name);

/// Elman: h' = tanh(x Wx + h Wh + b).
/// LSTM: gates [i f g o] = x Wx + h Wh + b; c' = f*c + i*g; h' = o*tanh(c').
struct RecurrentCell {
  CellType type = CellType::lstm;
  Linear input;             // in -> gates*hidden, carries the bias
  std::size_t recurrent = 0;  // hidden x gates*hidden
  std::size_t in = 0;
  std::size_t hidden = 0;

  struct State {
    Var h;
    Var c;  // LSTM only
  };

  static RecurrentCell create(ParamStore& ps, const std::string& name, CellType type,
                              std::size_t in, std::size_t hidden, Rng& rng);
  State initial(Tape& tape, std::size_t batch) const;
  State step(Tape& tape, Var x, const State& s) const;
};

// Runs a cell over (batch*seq) x in rows; returns the final hidden state.
Var run_sequence(Tape& tape, const RecurrentCell& cell, Var x, std::size_t batch, std::size_t seq);

// Rows {b*seq + t : b in [0, batch)}.
Var time_step_rows(Var x, std::size_t batch, std::size_t seq, std::size_t t);

}  // namespace fmbeam
