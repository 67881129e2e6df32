#pragma once

#include <cstdint>

#include "gforge/nn/tensor.h"

namespace gforge::nn {

// Power-iteration state for one weight tensor viewed as a (last dim) x
// (product of leading dims) matrix. u has length rows, v has length cols.
template <typename T>
struct SpectralState {
  Tensor<T> u;
  Tensor<T> v;
};

template <typename T>
struct SpectralResult {
  Tensor<T> weights_hat;
  Tensor<T> u_next;
  Tensor<T> v;
  double sigma = 0.0;
};

// Random unit u from `seed`, followed by one power step.
template <typename T>
SpectralState<T> init_spectral_state(const Tensor<T>& w, std::uint64_t seed);

// One step v = normalize(W^T u), u = normalize(W v); returns sigma = u^T W v,
// clamped below at 1e-12.
template <typename T>
double power_step(const Tensor<T>& w, SpectralState<T>& state);

// u^T W v for the current vectors, clamped below at 1e-12.
template <typename T>
double spectral_sigma(const Tensor<T>& w, const SpectralState<T>& state);

// One power step from `u`, then W / sigma.
template <typename T>
SpectralResult<T> spectral_normalize(const Tensor<T>& w, const Tensor<T>& u);

}  // namespace gforge::nn
