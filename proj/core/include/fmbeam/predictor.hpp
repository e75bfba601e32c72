#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/autograd.hpp"
#include "fmbeam/data.hpp"
#include "fmbeam/params.hpp"
#include "fmbeam/rng.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

/// Minibatch of windows in row-major stacked form.
struct Batch {
  std::size_t size = 0;
  std::size_t hist = 0;
  std::size_t pred = 0;
  Tensor boxes;             // (size*hist) x 4, sample b occupies rows b*hist .. b*hist+hist-1
  std::vector<int> labels;  // size x (hist+pred)

  std::size_t total() const noexcept { return hist + pred; }
  int label(std::size_t b, std::size_t i) const { return labels[b * total() + i]; }
  std::vector<int> labels_at(std::size_t i) const;  // column i over the batch
};

Batch make_batch(std::span<const WindowSample> samples, std::span<const std::size_t> indices);
Batch make_batch(std::span<const WindowSample> samples);

/// Loss components after weighting. total is always fm + term + ce.
struct LossBreakdown {
  double fm = 0.0;
  double term = 0.0;
  double ce = 0.0;
  double total = 0.0;
};

struct LossTerms {
  Var objective;
  LossBreakdown values;
};

/// Anything the shared training and evaluation harness can drive.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string kind() const = 0;  // "fm", "rnn" or "lstm"
  virtual ParamStore& params() = 0;
  virtual const ParamStore& params() const = 0;
  virtual const WindowConfig& window() const = 0;
  virtual std::size_t beams() const = 0;

  // Differentiable training objective for one minibatch.
  virtual LossTerms loss(Tape& tape, const Batch& batch, Rng& rng) const = 0;
  // Beam probabilities for the prediction frames: pred tensors of size x M.
  virtual std::vector<Tensor> predict(const Batch& batch) const = 0;

  // Everything needed to rebuild an identical untrained predictor.
  virtual nlohmann::json config_json() const = 0;

  std::size_t param_count() const { return params().scalar_count(); }
};

// Rebuilds a predictor from config_json(); parameters are freshly initialised.
std::unique_ptr<Predictor> make_predictor(const nlohmann::json& cfg);

// Saves parameters plus config; load refuses a checkpoint whose config fails
// to rebuild.
void save_predictor(const std::filesystem::path& path, const Predictor& model);
std::unique_ptr<Predictor> load_predictor(const std::filesystem::path& path);

}  // namespace fmbeam
