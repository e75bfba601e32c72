#include "fmbeam/flow.hpp"

#include <algorithm>
#include <numeric>

#include "fmbeam/errors.hpp"

namespace fmbeam {

Tensor one_hot_rows(std::span<const int> labels, std::size_t beams) {
  Tensor out = Tensor::zeros(labels.size(), beams);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= beams) {
      throw DataError("beam label " + std::to_string(labels[r]) + " outside [0, " +
                      std::to_string(beams) + ")");
    }
    out(r, static_cast<std::size_t>(labels[r])) = 1.0;
  }
  return out;
}

FlowEndpoints endpoints(const Batch& batch, std::size_t beams) {
  return {one_hot_rows(batch.labels_at(0), beams),
          one_hot_rows(batch.labels_at(batch.total() - 1), beams)};
}

Tensor interpolate(const Tensor& e0, const Tensor& e1, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("interpolation time " + std::to_string(tau) + " outside [0, 1]");
  }
  if (!e0.same_shape(e1)) {
    throw ShapeError("interpolate: " + e0.shape_string() + " vs " + e1.shape_string());
  }
  Tensor out = e0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - tau) * e0[i] + tau * e1[i];
  return out;
}

namespace {

// Mean over rows of the squared row norm of a.
Var mean_row_sq_norm(Var a, std::size_t rows) {
  return scale(sum(mul(a, a)), 1.0 / static_cast<double>(rows));
}

}  // namespace

Var fm_loss(Tape& tape, const VectorField& field, const FlowEndpoints& ends, Var c, Rng& rng) {
  const std::size_t b = ends.e0.rows();
  if (b == 0) throw ShapeError("fm_loss on an empty batch");
  Tensor tau = Tensor::zeros(b, 1);
  Tensor z = ends.e0;
  Tensor target = ends.e1;
  for (std::size_t r = 0; r < b; ++r) {
    tau[r] = rng.uniform();
    auto zr = z.row_span(r);
    auto e1r = ends.e1.row_span(r);
    auto tr = target.row_span(r);
    for (std::size_t k = 0; k < zr.size(); ++k) {
      tr[k] = e1r[k] - zr[k];
      zr[k] = (1.0 - tau[r]) * zr[k] + tau[r] * e1r[k];
    }
  }
  Var u = field.velocity(tape, tape.constant(std::move(z)), tape.constant(std::move(tau)), c);
  return mean_row_sq_norm(sub(u, tape.constant(std::move(target))), b);
}

LatentTrajectory euler_rollout(Tape& tape, const VectorField& field, Var z0, Var c,
                               std::size_t grid_points, Branch branch) {
  if (grid_points < 2) throw ConfigError("Euler rollout needs T >= 2 grid points");
  const std::size_t b = tape.value(z0).rows();
  const double dtau = 1.0 / static_cast<double>(grid_points - 1);
  LatentTrajectory traj;
  traj.branch = branch;
  traj.taus.reserve(grid_points);
  traj.states.reserve(grid_points);
  traj.states.push_back(z0);
  traj.taus.push_back(0.0);
  for (std::size_t i = 0; i + 1 < grid_points; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    Var u = field.velocity(tape, traj.states.back(), tape.constant(Tensor::filled(b, 1, tau)), c);
    traj.states.push_back(add(traj.states.back(), scale(u, dtau)));
    traj.taus.push_back(static_cast<double>(i + 1) / static_cast<double>(grid_points - 1));
  }
  return traj;
}

Var terminal_loss(Tape& tape, const LatentTrajectory& traj, const Tensor& e1) {
  const Tensor& z1 = tape.value(traj.terminal());
  if (!z1.same_shape(e1)) {
    throw ShapeError("terminal_loss: " + z1.shape_string() + " vs " + e1.shape_string());
  }
  return mean_row_sq_norm(sub(traj.terminal(), tape.constant(e1)), e1.rows());
}

std::vector<Var> decode_beams(const LatentTrajectory& traj, std::size_t pred) {
  if (pred == 0 || pred > traj.states.size()) {
    throw ShapeError("cannot decode " + std::to_string(pred) + " frames from a grid of " +
                     std::to_string(traj.states.size()));
  }
  std::vector<Var> out;
  out.reserve(pred);
  for (std::size_t i = traj.states.size() - pred; i < traj.states.size(); ++i) {
    out.push_back(softmax_rows(traj.states[i]));
  }
  return out;
}

Var ce_loss(std::span<const Var> probs, const std::vector<std::vector<int>>& labels) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw ShapeError("ce_loss: " + std::to_string(probs.size()) + " probability steps vs " +
                     std::to_string(labels.size()) + " label steps");
  }
  Tape& tape = *probs.front().tape;
  const std::size_t b = tape.value(probs.front()).rows();
  std::vector<Var> logs;
  logs.reserve(probs.size());
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (labels[t].size() != b) throw ShapeError("ce_loss: label count does not match batch");
    logs.push_back(sum(log_clamped(pick(probs[t], labels[t]), kProbabilityFloor)));
  }
  Var total = logs.front();
  for (std::size_t t = 1; t < logs.size(); ++t) total = add(total, logs[t]);
  return scale(total, -1.0 / static_cast<double>(b * probs.size()));
}

FlowPredictor::FlowPredictor(const ModelConfig& model, const WindowConfig& window,
                             LossWeights weights, std::uint64_t init_seed)
    : nets_(model, init_seed), window_(window), weights_(weights), init_seed_(init_seed) {
  window_.validate();
  if (weights_.fm < 0 || weights_.term < 0 || weights_.ce < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (weights_.fm == 0 && weights_.term == 0 && weights_.ce == 0) {
    throw ConfigError("at least one loss weight must be positive");
  }
}

namespace {

void check_batch(const Batch& batch, const WindowConfig& w) {
  if (batch.size == 0) throw DataError("empty batch");
  if (batch.hist != w.hist || batch.pred != w.pred) {
    throw ShapeError("batch window " + std::to_string(batch.hist) + "/" +
                     std::to_string(batch.pred) + " does not match model window " + w.name());
  }
}

std::vector<std::size_t> first_rows(std::size_t batch, std::size_t hist) {
  std::vector<std::size_t> rows(batch);
  for (std::size_t b = 0; b < batch; ++b) rows[b] = b * hist;
  return rows;
}

}  // namespace

LatentTrajectory FlowPredictor::rollout(Tape& tape, const Batch& batch) const {
  check_batch(batch, window_);
  Var feats = nets_.box_embed(tape, tape.constant(batch.boxes));
  Var c = nets_.condition(tape, feats, batch.size, batch.hist);
  Var z0 = select_rows(feats, first_rows(batch.size, batch.hist));
  return euler_rollout(tape, nets_, z0, c, window_.total(), Branch::inference);
}

LossTerms FlowPredictor::loss(Tape& tape, const Batch& batch, Rng& rng) const {
  check_batch(batch, window_);
  const std::size_t m = beams();
  Var feats = nets_.box_embed(tape, tape.constant(batch.boxes));
  Var c = nets_.condition(tape, feats, batch.size, batch.hist);
  const FlowEndpoints ends = endpoints(batch, m);

  LossTerms out;
  std::vector<Var> parts;
  if (weights_.fm > 0) {
    Var l = scale(fm_loss(tape, nets_, ends, c, rng), weights_.fm);
    out.values.fm = tape.value(l).item();
    parts.push_back(l);
  }
  if (weights_.term > 0) {
    auto traj =
        euler_rollout(tape, nets_, tape.constant(ends.e0), c, window_.total(), Branch::training);
    Var l = scale(terminal_loss(tape, traj, ends.e1), weights_.term);
    out.values.term = tape.value(l).item();
    parts.push_back(l);
  }
  if (weights_.ce > 0) {
    Var z0 = select_rows(feats, first_rows(batch.size, batch.hist));
    auto traj = euler_rollout(tape, nets_, z0, c, window_.total(), Branch::inference);
    auto probs = decode_beams(traj, window_.pred);
    std::vector<std::vector<int>> labels;
    for (std::size_t t = 0; t < window_.pred; ++t) labels.push_back(batch.labels_at(window_.hist + t));
    Var l = scale(ce_loss(probs, labels), weights_.ce);
    out.values.ce = tape.value(l).item();
    parts.push_back(l);
  }
  out.objective = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out.objective = add(out.objective, parts[i]);
  out.values.total = out.values.fm + out.values.term + out.values.ce;
  return out;
}

std::vector<Tensor> FlowPredictor::predict(const Batch& batch) const {
  Tape tape(&nets_.params(), false);
  auto traj = rollout(tape, batch);
  std::vector<Tensor> out;
  for (Var p : decode_beams(traj, window_.pred)) out.push_back(tape.value(p));
  return out;
}

nlohmann::json FlowPredictor::config_json() const {
  return {{"kind", kind()},
          {"model", to_json(nets_.config())},
          {"window", to_json(window_)},
          {"weights", {{"fm", weights_.fm}, {"term", weights_.term}, {"ce", weights_.ce}}},
          {"init_seed", init_seed_}};
}

Inference infer(const Predictor& model, const Tensor& history) {
  const WindowConfig& w = model.window();
  if (history.rows() != w.hist || history.cols() != 4) {
    throw ShapeError("history must be " + std::to_string(w.hist) + "x4, got " +
                     history.shape_string());
  }
  Batch batch;
  batch.size = 1;
  batch.hist = w.hist;
  batch.pred = w.pred;
  batch.boxes = history;
  batch.labels.assign(w.total(), 0);
  auto steps = model.predict(batch);
  Inference out;
  out.probs = Tensor::zeros(w.pred, model.beams());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    auto row = steps[t].row_span(0);
    std::copy(row.begin(), row.end(), out.probs.row_span(t).begin());
    out.beams.push_back(predict_topk(row, 1).front());
  }
  return out;
}

std::vector<std::size_t> predict_topk(std::span<const double> probs, std::size_t k) {
  if (k < 1 || k > probs.size()) {
    throw ConfigError("top-K needs 1 <= K <= " + std::to_string(probs.size()) + ", got K=" +
                      std::to_string(k));
  }
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

}  // namespace fmbeam
