#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "fmbeam/params.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;
};

/// Records primitive ops in execution order and runs reverse-mode
/// differentiation over them.
///
/// Nodes are appended only, so every op's inputs precede it and a single
/// reverse sweep visits each op once. Parameters enter through `param()`,
/// which references the store's tensor without copying; the store must
/// outlive the tape and must not change while the tape is alive.
class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  explicit Tape(const ParamStore* params = nullptr, bool record_grad = true);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to parameter `index` of the store; created once per tape.
  Var param(std::size_t index);
  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad);

  // Used by op implementations.
  Var push(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  // Gradient accumulator for `v`, zero-initialised on first use.
  Tensor& grad_buffer(std::uint32_t id);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards. The loss must
  // be a 1x1 value recorded on this tape.
  void backward(Var loss);

  // d(loss)/d(v) after backward(); zeros if v did not influence the loss.
  Tensor grad(Var v) const;
  Tensor param_grad(std::size_t index) const;
  std::vector<Tensor> param_grads() const;

  std::size_t size() const noexcept { return nodes_.size(); }
  bool recording() const noexcept { return record_grad_; }
  void set_check_finite(bool on) noexcept { check_finite_ = on; }

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Tensor& value() const { return external != nullptr ? *external : own; }
  };

  Var add_node(Node node);

  const ParamStore* params_;
  bool record_grad_;
  bool check_finite_ = true;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> param_nodes_;
};

// ---- differentiable primitives -------------------------------------------
// All operate on matrices (see Tensor). Shape violations throw ShapeError.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var add_row(Var a, Var row);           // a (r x c) + row (1 x c) broadcast
Var scale(Var a, double s);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var log_clamped(Var a, double floor);  // log(max(a, floor)); no grad below floor
Var pick(Var a, std::span<const int> cols);  // out[r] = a(r, cols[r]), shape r x 1
Var sum(Var a);                        // 1x1
Var mean(Var a);                       // 1x1
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var select_rows(Var a, std::span<const std::size_t> rows);
Var mean_pool(Var a, std::size_t group);  // average consecutive groups of rows
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Scaled dot-product self attention over `batch` independent sequences of
// length `seq`. q, k, v are (batch*seq) x d with heads laid out as
// contiguous column blocks of width d/heads.
Var attention(Var q, Var k, Var v, std::size_t batch, std::size_t seq, std::size_t heads);

}  // namespace fmbeam
