#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fmbeam/autograd.hpp"
#include "fmbeam/model.hpp"
#include "fmbeam/predictor.hpp"

namespace fmbeam {

inline constexpr double kProbabilityFloor = 1e-12;

// One row per label, 1 at the label's column.
Tensor one_hot_rows(std::span<const int> labels, std::size_t beams);

/// One-hot embeddings of the first and last ground-truth beam of each window.
struct FlowEndpoints {
  Tensor e0;  // B x M
  Tensor e1;  // B x M
};

FlowEndpoints endpoints(const Batch& batch, std::size_t beams);

// (1 - tau) e0 + tau e1; tau must lie in [0, 1].
Tensor interpolate(const Tensor& e0, const Tensor& e1, double tau);

// Mean over the batch of ||u(z_tau, tau, c) - (e1 - e0)||^2 with one
// tau ~ U(0, 1) drawn per sample.
Var fm_loss(Tape& tape, const VectorField& field, const FlowEndpoints& ends, Var c, Rng& rng);

enum class Branch { training, inference };

/// Latent states on the grid tau_i = i / (T - 1), i = 0..T-1.
struct LatentTrajectory {
  Branch branch = Branch::training;
  std::vector<double> taus;
  std::vector<Var> states;  // each B x M

  Var terminal() const { return states.back(); }
};

// z_{i+1} = z_i + dtau * u(z_i, tau_i, c); exactly T - 1 field evaluations.
LatentTrajectory euler_rollout(Tape& tape, const VectorField& field, Var z0, Var c,
                               std::size_t grid_points, Branch branch);

// Mean over the batch of ||z_1 - e1||^2.
Var terminal_loss(Tape& tape, const LatentTrajectory& traj, const Tensor& e1);

// softmax of the last `pred` grid states.
std::vector<Var> decode_beams(const LatentTrajectory& traj, std::size_t pred);

// -(1/T_pred) sum_t log max(p_t[label], 1e-12), averaged over the batch.
// labels[t] holds the batch's labels for prediction step t.
Var ce_loss(std::span<const Var> probs, const std::vector<std::vector<int>>& labels);

struct LossWeights {
  double fm = 1.0;
  double term = 1.0;
  double ce = 1.0;
};

/// Vision-conditioned flow-matching beam predictor.
class FlowPredictor : public Predictor {
 public:
  FlowPredictor(const ModelConfig& model, const WindowConfig& window, LossWeights weights,
                std::uint64_t init_seed);

  std::string kind() const override { return "fm"; }
  ParamStore& params() override { return nets_.params(); }
  const ParamStore& params() const override { return nets_.params(); }
  const WindowConfig& window() const override { return window_; }
  std::size_t beams() const override { return nets_.config().beams; }

  LossTerms loss(Tape& tape, const Batch& batch, Rng& rng) const override;
  std::vector<Tensor> predict(const Batch& batch) const override;
  nlohmann::json config_json() const override;

  FlowNetworks& networks() noexcept { return nets_; }
  const FlowNetworks& networks() const noexcept { return nets_; }
  const LossWeights& weights() const noexcept { return weights_; }

  // Inference-branch rollout from g_box of the earliest history frame.
  LatentTrajectory rollout(Tape& tape, const Batch& batch) const;

 private:
  FlowNetworks nets_;
  WindowConfig window_;
  LossWeights weights_;
  std::uint64_t init_seed_;
};

struct Inference {
  Tensor probs;                    // T_pred x M
  std::vector<std::size_t> beams;  // argmax per prediction frame
};

// Single-window inference; history must be T_hist x 4.
Inference infer(const Predictor& model, const Tensor& history);

// Indices of the k largest entries, by descending value, ties to the lowest index.
std::vector<std::size_t> predict_topk(std::span<const double> probs, std::size_t k);

}  // namespace fmbeam
