#include "gforge/nn/spectral_norm.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "gforge/error.h"

namespace gforge::nn {
namespace {

constexpr double kSigmaFloor = 1e-12;

template <typename T>
void normalize(Tensor<T>& x) {
  double n = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) n += static_cast<double>(x[i]) * x[i];
  n = std::sqrt(n);
  if (n < kSigmaFloor) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<T>(x[i] / n);
}

template <typename T>
void check_dims(const Tensor<T>& w, std::size_t rows, std::size_t cols, const SpectralState<T>& s) {
  if (s.u.size() != rows) fail_invalid("spectral norm: u has length " + std::to_string(s.u.size()) + ", expected " +
                                       std::to_string(rows));
  if (!s.v.empty() && s.v.size() != cols) fail_invalid("spectral norm: v length mismatch");
  (void)w;
}

}  // namespace

template <typename T>
double power_step(const Tensor<T>& w, SpectralState<T>& s) {
  if (w.rank() < 1 || w.empty()) fail_invalid("spectral norm: empty weight");
  const std::size_t rows = static_cast<std::size_t>(w.dim(w.rank() - 1));
  const std::size_t cols = w.size() / rows;
  check_dims(w, rows, cols, s);
  Tensor<T> v({static_cast<int>(cols)}, T(0));
  for (std::size_t k = 0; k < cols; ++k) {
    double acc = 0.0;
    for (std::size_t o = 0; o < rows; ++o) acc += static_cast<double>(w[k * rows + o]) * s.u[o];
    v[k] = static_cast<T>(acc);
  }
  normalize(v);
  Tensor<T> u({static_cast<int>(rows)}, T(0));
  std::vector<double> wu(rows, 0.0);
  for (std::size_t k = 0; k < cols; ++k) {
    for (std::size_t o = 0; o < rows; ++o) wu[o] += static_cast<double>(w[k * rows + o]) * v[k];
  }
  for (std::size_t o = 0; o < rows; ++o) u[o] = static_cast<T>(wu[o]);
  normalize(u);
  s.u = std::move(u);
  s.v = std::move(v);
  return spectral_sigma(w, s);
}

template <typename T>
double spectral_sigma(const Tensor<T>& w, const SpectralState<T>& s) {
  const std::size_t rows = static_cast<std::size_t>(w.dim(w.rank() - 1));
  const std::size_t cols = w.size() / rows;
  check_dims(w, rows, cols, s);
  if (s.v.size() != cols) fail_invalid("spectral norm: v not initialized");
  double sigma = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    double row = 0.0;
    for (std::size_t o = 0; o < rows; ++o) row += static_cast<double>(s.u[o]) * w[k * rows + o];
    sigma += row * s.v[k];
  }
  return std::max(sigma, kSigmaFloor);
}

template <typename T>
SpectralState<T> init_spectral_state(const Tensor<T>& w, std::uint64_t seed) {
  const int rows = w.dim(w.rank() - 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralState<T> s;
  s.u = Tensor<T>({rows}, T(0));
  for (int o = 0; o < rows; ++o) s.u[o] = static_cast<T>(normal(rng));
  normalize(s.u);
  power_step(w, s);
  return s;
}

template <typename T>
SpectralResult<T> spectral_normalize(const Tensor<T>& w, const Tensor<T>& u) {
  SpectralState<T> s{u, {}};
  SpectralResult<T> r;
  r.sigma = power_step(w, s);
  r.weights_hat = Tensor<T>(w.shape());
  for (std::size_t i = 0; i < w.size(); ++i) r.weights_hat[i] = static_cast<T>(w[i] / r.sigma);
  r.u_next = std::move(s.u);
  r.v = std::move(s.v);
  return r;
}

#define GFORGE_INSTANTIATE_SN(T)                                                  \
  template SpectralState<T> init_spectral_state<T>(const Tensor<T>&, std::uint64_t); \
  template double power_step<T>(const Tensor<T>&, SpectralState<T>&);             \
  template double spectral_sigma<T>(const Tensor<T>&, const SpectralState<T>&);   \
  template SpectralResult<T> spectral_normalize<T>(const Tensor<T>&, const Tensor<T>&);

GFORGE_INSTANTIATE_SN(float)
GFORGE_INSTANTIATE_SN(double)

#undef GFORGE_INSTANTIATE_SN

}  // namespace gforge::nn
