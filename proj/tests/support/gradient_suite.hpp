#pragma once

#include <string>
#include <vector>

#include "fmbeam/baselines.hpp"
#include "fmbeam/flow.hpp"
#include "fmbeam/model.hpp"
#include "fmbeam/nn.hpp"
#include "oracles.hpp"

namespace fmbeam::testing {

struct GradCase {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t seeds = 0;
};

// Contracts the output against a fixed random tensor so every output entry
// carries a distinct weight.
inline Var project(Tape& tape, Var out, Rng& rng) {
  const Tensor& v = tape.value(out);
  return sum(mul(out, tape.constant(random_tensor(v.rows(), v.cols(), rng))));
}

// Zero biases put ReLU inputs exactly on the kink for dead rows; moving
// every parameter off its initial value keeps the probes differentiable.
inline void jitter(ParamStore& ps, Rng& rng) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (auto& v : ps[i].value.values()) v += rng.uniform(-0.2, 0.2);
  }
}

inline ModelConfig tiny_model(CondEncoder cond = CondEncoder::transformer) {
  ModelConfig cfg;
  cfg.beams = 4;
  cfg.box_hidden = {5, 6};
  cfg.cond = cond;
  cfg.cond_layers = 2;
  cfg.cond_heads = 2;
  cfg.cond_dim = 8;
  cfg.cond_ff = 6;
  cfg.field_hidden = {7};
  return cfg;
}

inline Batch random_batch(std::size_t size, std::size_t hist, std::size_t pred, std::size_t beams,
                          Rng& rng) {
  Batch b;
  b.size = size;
  b.hist = hist;
  b.pred = pred;
  b.boxes = random_tensor(size * hist, 4, rng, 0.05, 0.95);
  for (std::size_t i = 0; i < size * (hist + pred); ++i) {
    b.labels.push_back(static_cast<int>(rng.below(beams)));
  }
  return b;
}

/// Central-difference check of every differentiable primitive, every
/// network and both recurrent cells, over `seeds` random seeds each.
inline std::vector<GradCase> run_gradient_suite(std::size_t seeds) {
  using Fn = std::function<GradCheck(Rng&)>;
  std::vector<std::pair<std::string, Fn>> cases;

  auto op = [&](std::string name, std::vector<std::pair<std::size_t, std::size_t>> shapes,
                std::function<Var(Tape&, const std::vector<Var>&)> f, double lo = -1.0,
                double hi = 1.0) {
    cases.emplace_back(name, [=](Rng& rng) {
      std::vector<Tensor> inputs;
      for (auto [r, c] : shapes) inputs.push_back(random_tensor(r, c, rng, lo, hi));
      const std::uint64_t proj_seed = rng.next_u64();
      return check_gradients(
          [&](Tape& t, const std::vector<Var>& v) {
            Rng pr(proj_seed);
            return project(t, f(t, v), pr);
          },
          inputs, rng);
    });
  };

  op("matmul", {{3, 4}, {4, 5}}, [](Tape&, auto& v) { return matmul(v[0], v[1]); });
  op("add", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return add(v[0], v[1]); });
  op("sub", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return sub(v[0], v[1]); });
  op("mul", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return mul(v[0], v[1]); });
  op("add_row", {{3, 4}, {1, 4}}, [](Tape&, auto& v) { return add_row(v[0], v[1]); });
  op("scale", {{3, 4}}, [](Tape&, auto& v) { return scale(v[0], -1.7); });
  op("relu", {{4, 5}}, [](Tape&, auto& v) { return relu(v[0]); });
  op("tanh", {{4, 5}}, [](Tape&, auto& v) { return tanh(v[0]); });
  op("sigmoid", {{4, 5}}, [](Tape&, auto& v) { return sigmoid(v[0]); });
  op("softmax_rows", {{3, 6}}, [](Tape&, auto& v) { return softmax_rows(scale(v[0], 3.0)); });
  op("log_clamped", {{3, 4}}, [](Tape&, auto& v) { return log_clamped(v[0], 1e-12); }, 0.1, 2.0);
  op("pick", {{4, 5}}, [](Tape&, auto& v) {
    static const int cols[] = {0, 4, 2, 2};
    return pick(v[0], cols);
  });
  op("sum", {{3, 4}}, [](Tape&, auto& v) { return sum(v[0]); });
  op("mean", {{3, 4}}, [](Tape&, auto& v) { return mean(v[0]); });
  op("concat_cols", {{3, 2}, {3, 4}, {3, 1}}, [](Tape&, auto& v) {
    const Var parts[] = {v[0], v[1], v[2]};
    return concat_cols(parts);
  });
  op("slice_cols", {{3, 6}}, [](Tape&, auto& v) { return slice_cols(v[0], 2, 3); });
  op("select_rows", {{5, 3}}, [](Tape&, auto& v) {
    static const std::size_t rows[] = {4, 0, 4, 2};
    return select_rows(v[0], rows);
  });
  op("mean_pool", {{6, 3}}, [](Tape&, auto& v) { return mean_pool(v[0], 3); });
  op("layer_norm", {{4, 6}, {1, 6}, {1, 6}},
     [](Tape&, auto& v) { return layer_norm(scale(v[0], 2.0), v[1], v[2]); });
  op("attention", {{6, 4}, {6, 4}, {6, 4}},
     [](Tape&, auto& v) { return attention(v[0], v[1], v[2], 2, 3, 2); });

  auto net = [&](std::string name, std::function<GradCheck(Rng&)> f) { cases.emplace_back(name, f); };

  net("g_box", [](Rng& rng) {
    FlowNetworks nets(tiny_model(), rng.next_u64());
    jitter(nets.params(), rng);
    const Tensor x = random_tensor(5, 4, rng, 0.0, 1.0);
    const std::uint64_t ps = rng.next_u64();
    return check_param_gradients(nets.params(), [&](Tape& t) {
      Rng pr(ps);
      return project(t, nets.box_embed(t, t.constant(x)), pr);
    }, rng);
  });
  net("f_cond", [](Rng& rng) {
    FlowNetworks nets(tiny_model(), rng.next_u64());
    jitter(nets.params(), rng);
    const Tensor feats = random_tensor(2 * 3, 4, rng);
    const std::uint64_t ps = rng.next_u64();
    auto r = check_param_gradients(nets.params(), [&](Tape& t) {
      Rng pr(ps);
      return project(t, nets.condition(t, t.constant(feats), 2, 3), pr);
    }, rng);
    auto in = check_gradients([&](Tape& t, const std::vector<Var>& v) {
      Rng pr(ps);
      return project(t, nets.condition(t, v[0], 2, 3), pr);
    }, {feats}, rng, &nets.params());
    return GradCheck{std::max(r.max_rel_error, in.max_rel_error), r.checked + in.checked};
  });
  net("u_theta", [](Rng& rng) {
    FlowNetworks nets(tiny_model(), rng.next_u64());
    jitter(nets.params(), rng);
    const Tensor z = random_tensor(3, 4, rng);
    const Tensor tau = random_tensor(3, 1, rng, 0.0, 1.0);
    const Tensor c = random_tensor(3, 8, rng);
    const std::uint64_t ps = rng.next_u64();
    auto r = check_param_gradients(nets.params(), [&](Tape& t) {
      Rng pr(ps);
      return project(t, nets.velocity(t, t.constant(z), t.constant(tau), t.constant(c)), pr);
    }, rng);
    auto in = check_gradients([&](Tape& t, const std::vector<Var>& v) {
      Rng pr(ps);
      return project(t, nets.velocity(t, v[0], v[1], v[2]), pr);
    }, {z, tau, c}, rng, &nets.params());
    return GradCheck{std::max(r.max_rel_error, in.max_rel_error), r.checked + in.checked};
  });
  net("fm_objective", [](Rng& rng) {
    FlowPredictor model(tiny_model(), WindowConfig{3, 2, 1}, LossWeights{}, rng.next_u64());
    jitter(model.params(), rng);
    const Batch batch = random_batch(3, 3, 2, 4, rng);
    const std::uint64_t tau_seed = rng.next_u64();
    return check_param_gradients(model.params(), [&](Tape& t) {
      Rng tr(tau_seed);
      return model.loss(t, batch, tr).objective;
    }, rng, 2);
  });
  for (CellType cell : {CellType::elman, CellType::lstm}) {
    net(cell_name(cell) + "_cell", [cell](Rng& rng) {
      ParamStore ps;
      Rng init(rng.next_u64());
      const RecurrentCell rc = RecurrentCell::create(ps, "cell", cell, 3, 5, init);
      jitter(ps, rng);
      const Tensor x = random_tensor(2 * 4, 3, rng);
      const std::uint64_t pseed = rng.next_u64();
      auto f = [&](Tape& t, Var xv) {
        Rng pr(pseed);
        return project(t, run_sequence(t, rc, xv, 2, 4), pr);
      };
      auto r = check_param_gradients(ps, [&](Tape& t) { return f(t, t.constant(x)); }, rng);
      auto in = check_gradients([&](Tape& t, const std::vector<Var>& v) { return f(t, v[0]); },
                                {x}, rng, &ps);
      return GradCheck{std::max(r.max_rel_error, in.max_rel_error), r.checked + in.checked};
    });
  }
  for (const char* kind : {"rnn", "lstm"}) {
    net(std::string(kind) + "_predictor", [kind](Rng& rng) {
      RecurrentConfig rc;
      rc.cell = parse_cell(kind);
      rc.beams = 4;
      rc.hidden = 5;
      RecurrentPredictor model(rc, WindowConfig{3, 3, 1}, rng.next_u64());
      jitter(model.params(), rng);
      const Batch batch = random_batch(2, 3, 3, 4, rng);
      Rng unused(0);
      return check_param_gradients(model.params(), [&](Tape& t) {
        return model.loss(t, batch, unused).objective;
      }, rng);
    });
  }

  std::vector<GradCase> out;
  for (auto& [name, fn] : cases) {
    GradCase gc{name, 0.0, 0, seeds};
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = Rng(0xC0FFEE).fork(s * 1000 + out.size());
      const GradCheck r = fn(rng);
      gc.max_rel_error = std::max(gc.max_rel_error, r.max_rel_error);
      gc.checked += r.checked;
    }
    out.push_back(gc);
  }
  return out;
}

}  // namespace fmbeam::testing
