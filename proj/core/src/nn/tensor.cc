#include "gforge/nn/tensor.h"

#include <cmath>
#include <sstream>

#include "gforge/error.h"

namespace gforge::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) fail_invalid("negative tensor extent");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ")";
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) fail_invalid("tensor data length does not match " + shape_string(shape_));
}

template <typename T>
void Tensor<T>::fill(T v) {
  for (T& x : data_) x = v;
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <typename T>
void Tensor<T>::add_inplace(const Tensor& other) {
  if (other.shape_ != shape_) {
    fail_invalid("tensor shape mismatch " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace gforge::nn
