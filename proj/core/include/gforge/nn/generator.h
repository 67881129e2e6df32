#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gforge/nn/layers.h"

namespace gforge::nn {

struct GeneratorConfig {
  int height = 64;
  int width = 64;
  int in_channels = 4;  // rgb + depth / d_max
  int stem_width = 8;
  std::vector<int> stage_widths{8, 16, 32, 64};
  std::vector<int> stage_depths{1, 1, 1, 1};
  int bottleneck_depth = 4;
  int bottleneck_width = 0;  // 0: last stage width
  int head_width = 8;
  double d_max = 20.0;
  double initial_depth = 2.0;
  double leaky_slope = 0.2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;
  bool spectral_norm = true;
  std::uint64_t seed = 0;

  void validate() const;
};

template <typename T>
struct GeneratorOutput {
  Var<T> rgb = -1;    // (N, H, W, 3) in [0, 1]
  Var<T> depth = -1;  // (N, H, W, 1) meters, > 0
};

// Partial-convolution residual encoder shared by two decoders (rgb, depth)
// with skip connections from the stem and the first three stages.
template <typename T>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& config);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  // input: (N, H, W, 4) with depth channel divided by d_max; mask: (N, H, W, 1).
  GeneratorOutput<T> forward(Tape<T>& tape, Var<T> input, const Tensor<T>& mask, WeightSource source, bool train);

  void power_iterate();
  void power_iterate_shadow();

  const GeneratorConfig& config() const { return config_; }
  ParameterStore<T>& params() { return store_; }
  const ParameterStore<T>& params() const { return store_; }
  std::vector<ConvLayer<T>*> conv_layers();
  std::vector<BatchNormLayer<T>*> norm_layers();

 private:
  struct ResBlock {
    ConvLayer<T> conv1, conv2, shortcut;
    BatchNormLayer<T> bn1, bn2, bn_shortcut;
    bool project = false;
  };
  struct BottleneckBlock {
    BatchNormLayer<T> bn;
    ConvLayer<T> conv;
  };
  struct UpBlock {
    ConvLayer<T> up;
    BatchNormLayer<T> bn_up;
    bool has_skip = false;
    ConvLayer<T> skip;
    ConvLayer<T> conv;
    BatchNormLayer<T> bn;
  };
  struct Decoder {
    std::vector<UpBlock> ups;
    std::vector<BatchNormLayer<T>> head_bn;
    std::vector<ConvLayer<T>> head_conv;
  };

  void build_decoder(Decoder& d, const std::string& name, int out_channels, std::mt19937_64& rng);
  Var<T> run_resblock(Tape<T>& tape, ResBlock& b, Var<T> x, Tensor<T>& mask, WeightSource s, bool train);
  Var<T> run_decoder(Tape<T>& tape, Decoder& d, Var<T> h, const std::vector<Var<T>>& taps, WeightSource s,
                     bool train);

  GeneratorConfig config_;
  ParameterStore<T> store_;
  ConvLayer<T> stem_;
  BatchNormLayer<T> stem_bn_;
  std::vector<std::vector<ResBlock>> stages_;
  std::vector<BottleneckBlock> bottleneck_;
  Decoder rgb_decoder_;
  Decoder depth_decoder_;
};

}  // namespace gforge::nn
