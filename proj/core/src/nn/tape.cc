#include "gforge/nn/tape.h"

#include "gforge/error.h"

namespace gforge::nn {

template <typename T>
typename Tape<T>::Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
typename Tape<T>::Var Tape<T>::constant_ref(const Tensor<T>& value) {
  Node n;
  n.borrowed = &value;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
typename Tape<T>::Var Tape<T>::parameter(Parameter<T>& p) {
  Node n;
  n.borrowed = &p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
typename Tape<T>::Var Tape<T>::push(Tensor<T> value, bool requires_grad, BackwardFn backward) {
#ifndef NDEBUG
  if (!value.all_finite()) fail_numerical("non-finite tensor produced on the tape");
#endif
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v)];
  return n.borrowed ? *n.borrowed : n.owned;
}

template <typename T>
bool Tape<T>::any_requires_grad(std::initializer_list<Var> vars) const {
  for (Var v : vars) {
    if (v >= 0 && nodes_[static_cast<std::size_t>(v)].requires_grad) return true;
  }
  return false;
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v)];
  if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape(), T(0));
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (value(loss).size() != 1) fail_invalid("backward needs a scalar loss");
  if (!nodes_[static_cast<std::size_t>(loss)].requires_grad) return;
  grad(loss)[0] = T(1);
  for (Var v = loss; v >= 0; --v) {
    Node& n = nodes_[static_cast<std::size_t>(v)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      if (n.param->grad.empty()) n.param->grad = Tensor<T>(n.param->value.shape(), T(0));
      n.param->grad.add_inplace(n.grad);
    } else if (n.backward) {
      n.backward(*this, v);
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace gforge::nn
