#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gforge/nn/tensor.h"

namespace gforge::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  // EMA copy, empty for networks that keep no shadow.
  Tensor<T> shadow;
};

// Reverse-mode tape for one forward pass. Nodes are appended in evaluation
// order; backward() walks them in reverse and accumulates parameter gradients
// into Parameter::grad.
template <typename T>
class Tape {
 public:
  using Var = int;
  using BackwardFn = std::function<void(Tape&, Var)>;

  Var constant(Tensor<T> value);
  // Borrowed constant; `value` must outlive the tape.
  Var constant_ref(const Tensor<T>& value);
  // Leaf bound to p.value whose gradient flows into p.grad.
  Var parameter(Parameter<T>& p);

  Var push(Tensor<T> value, bool requires_grad, BackwardFn backward);

  // Invalidated by the next node added to the tape.
  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v].requires_grad; }
  bool any_requires_grad(std::initializer_list<Var> vars) const;

  // Gradient buffer of v, allocated as zeros on first use.
  Tensor<T>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v].grad.empty(); }

  // Seeds d(loss)/d(loss) = 1 for a single-element `loss`.
  void backward(Var loss);

  // Non-smooth ops append their branch decisions here when recording is on;
  // finite-difference checks use it to detect steps that cross a kink.
  void set_record_branches(bool on) { record_branches_ = on; }
  bool record_branches() const { return record_branches_; }
  void record_branch(bool taken) { branches_.push_back(taken ? 1 : 0); }
  const std::vector<std::uint8_t>& branches() const { return branches_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* borrowed = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool record_branches_ = false;
  std::vector<std::uint8_t> branches_;
};

}  // namespace gforge::nn
