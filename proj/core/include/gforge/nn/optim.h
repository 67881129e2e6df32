#pragma once

#include <cstdint>
#include <vector>

#include "gforge/nn/layers.h"

namespace gforge::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over every parameter of a store, in registration order. Moments are
// kept beside the store; the store must outlive the optimizer.
template <typename T>
class Adam {
 public:
  Adam(ParameterStore<T>& store, const AdamConfig& config);

  // Applies one update from Parameter::grad (missing grads count as zero).
  void step();

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig config_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  std::int64_t t_ = 0;
};

inline constexpr double kEmaDecay = 0.999;

// shadow <- decay * shadow + (1 - decay) * live.
template <typename T>
void ema_update(Tensor<T>& shadow, const Tensor<T>& live, double decay = kEmaDecay);

template <typename T>
void ema_update(ParameterStore<T>& store, double decay = kEmaDecay);

}  // namespace gforge::nn
