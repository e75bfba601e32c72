#include <limits>
#include <string>

#include "fmbeam/autograd.hpp"
#include "fmbeam/errors.hpp"

namespace fmbeam {

namespace {
constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();
}

Tape::Tape(const ParamStore* params, bool record_grad)
    : params_(params), record_grad_(record_grad) {
  if (params_ != nullptr) param_nodes_.assign(params_->size(), kNoNode);
  nodes_.reserve(256);
}

Var Tape::add_node(Node node) {
  if (nodes_.size() >= kNoNode) throw Error("tape overflow");
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(std::size_t index) {
  if (params_ == nullptr || index >= params_->size()) {
    throw Error("tape has no parameter " + std::to_string(index));
  }
  if (param_nodes_[index] != kNoNode) return Var{this, param_nodes_[index]};
  Node node;
  node.external = &(*params_)[index].value;
  node.requires_grad = record_grad_;
  Var v = add_node(std::move(node));
  param_nodes_[index] = v.id;
  return v;
}

Var Tape::constant(Tensor value) { return leaf(std::move(value), false); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.own = std::move(value);
  node.requires_grad = requires_grad && record_grad_;
  return add_node(std::move(node));
}

Var Tape::push(std::string_view op, Tensor value, std::span<const Var> inputs,
               BackwardFn backward) {
  if (check_finite_ && !value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node node;
  node.own = std::move(value);
  if (record_grad_) {
    for (Var in : inputs) {
      if (in.tape != this) throw Error(std::string(op) + ": operands from different tapes");
      if (nodes_[in.id].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  return add_node(std::move(node));
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value(); }

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

Tensor& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value().empty()) n.grad = Tensor(n.value().shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error("backward: loss recorded on another tape");
  if (value(loss).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + value(loss).shape_string());
  }
  if (!record_grad_) throw Error("backward on a tape created without gradient recording");
  for (auto& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id).fill(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.value(), n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty()) return Tensor(n.value().shape(), 0.0);
  return n.grad;
}

Tensor Tape::param_grad(std::size_t index) const {
  if (params_ == nullptr || index >= params_->size()) {
    throw Error("tape has no parameter " + std::to_string(index));
  }
  if (param_nodes_[index] == kNoNode) return Tensor((*params_)[index].value.shape(), 0.0);
  return grad(Var{const_cast<Tape*>(this), param_nodes_[index]});
}

std::vector<Tensor> Tape::param_grads() const {
  std::vector<Tensor> out;
  if (params_ == nullptr) return out;
  out.reserve(params_->size());
  for (std::size_t i = 0; i < params_->size(); ++i) out.push_back(param_grad(i));
  return out;
}

}  // namespace fmbeam
