#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace gforge::nn {

using Shape = std::vector<int>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor. Image tensors are NHWC: (batch, height, width,
// channels). Convolution weights are (kh, kw, in_channels, out_channels).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{}) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // NHWC element access.
  T& at(int n, int y, int x, int c) { return data_[offset(n, y, x, c)]; }
  const T& at(int n, int y, int x, int c) const { return data_[offset(n, y, x, c)]; }

  void fill(T v);
  bool all_finite() const;
  bool operator==(const Tensor&) const = default;

  // Shape-checked elementwise accumulation.
  void add_inplace(const Tensor& other);

 private:
  std::size_t offset(int n, int y, int x, int c) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c;
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  std::vector<To> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<To>(t[i]);
  return Tensor<To>(t.shape(), std::move(out));
}

}  // namespace gforge::nn
