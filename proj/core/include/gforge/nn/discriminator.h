#pragma once

#include <cstdint>
#include <vector>

#include "gforge/nn/layers.h"

namespace gforge::nn {

struct DiscriminatorConfig {
  int in_channels = 4;
  // Output widths of the first six convolutions of each tower.
  std::vector<int> widths{8, 16, 32, 32, 32, 32};
  double leaky_slope = 0.2;
  double in_eps = 1e-5;
  double d_max = 20.0;
  bool spectral_norm = true;
  std::uint64_t seed = 1;

  void validate() const;
};

template <typename T>
struct DiscriminatorOutput {
  Var<T> full = -1;  // patch logits of the full-resolution tower
  Var<T> half = -1;  // patch logits of the average-pooled tower
};

// Two-scale patch discriminator; each tower is a stack of 4x4 convolutions
// with instance normalization ending in a 1-channel map.
template <typename T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& config);
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  // rgbd: (N, H, W, 4) with depth already divided by d_max.
  DiscriminatorOutput<T> forward(Tape<T>& tape, Var<T> rgbd, WeightSource source);

  void power_iterate();

  const DiscriminatorConfig& config() const { return config_; }
  ParameterStore<T>& params() { return store_; }
  const ParameterStore<T>& params() const { return store_; }
  std::vector<ConvLayer<T>*> conv_layers();

 private:
  Var<T> run_tower(Tape<T>& tape, std::vector<ConvLayer<T>>& tower, Var<T> x, WeightSource source);

  DiscriminatorConfig config_;
  ParameterStore<T> store_;
  std::vector<ConvLayer<T>> full_;
  std::vector<ConvLayer<T>> half_;
};

// Concatenates rgb with depth / d_max into the 4-channel discriminator input.
template <typename T>
Var<T> discriminator_input(Tape<T>& tape, Var<T> rgb, Var<T> depth, double d_max);

}  // namespace gforge::nn
