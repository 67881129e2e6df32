#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "gforge/nn/ops.h"
#include "gforge/nn/spectral_norm.h"

namespace gforge::nn {

// Which tensor a layer reads for its weights on a given tape.
enum class WeightSource {
  kLive,    // trainable leaf, gradients flow into Parameter::grad
  kFrozen,  // live values as constants (no gradient)
  kShadow,  // EMA copy as constants
};

// Owns parameters at stable addresses, in registration order.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, Tensor<T> value);
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;
  std::size_t parameter_count() const;

  void zero_grad();
  // shadow = value for every parameter.
  void reset_shadow();

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::map<std::string, Parameter<T>*> by_name_;
};

template <typename T>
Var<T> bind(Tape<T>& tape, Parameter<T>& p, WeightSource source);

enum class ConvKind { kStandard, kPartial, kTransposed };

// One convolution with optional spectral normalization. Padding is symmetric
// unless `same` is set (TensorFlow SAME, extra row/column at bottom/right).
template <typename T>
class ConvLayer {
 public:
  struct Options {
    ConvKind kind = ConvKind::kStandard;
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    bool same = false;
    bool bias = true;
    bool spectral_norm = false;
  };

  ConvLayer() = default;
  ConvLayer(ParameterStore<T>& store, const std::string& name, int in_channels, int out_channels,
            const Options& options, std::mt19937_64& rng);

  // Geometry for an input of (in_h, in_w); for transposed layers this is the
  // adjoint correlation from the upsampled output.
  ConvGeometry geometry(int in_h, int in_w) const;

  // `mask` and `mask_out` are used by partial layers only.
  Var<T> forward(Tape<T>& tape, Var<T> x, WeightSource source, const Tensor<T>* mask = nullptr,
                 Tensor<T>* mask_out = nullptr);

  // One power-iteration step on the live (or shadow) weights.
  void power_iterate();
  void power_iterate_shadow();

  const std::string& name() const { return name_; }
  Parameter<T>* weight() const { return weight_; }
  Parameter<T>* bias() const { return bias_; }
  bool spectral() const { return options_.spectral_norm; }
  SpectralState<T>& spectral_state() { return sn_; }
  SpectralState<T>& shadow_spectral_state() { return sn_shadow_; }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  std::string name_;
  Options options_;
  int in_channels_ = 0;
  int out_channels_ = 0;
  Parameter<T>* weight_ = nullptr;
  Parameter<T>* bias_ = nullptr;
  SpectralState<T> sn_;
  SpectralState<T> sn_shadow_;
};

template <typename T>
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  BatchNormLayer(ParameterStore<T>& store, const std::string& name, int channels, double eps, double momentum);

  Var<T> forward(Tape<T>& tape, Var<T> x, WeightSource source, bool train);

  const std::string& name() const { return name_; }
  BatchNormStats<T>& stats() { return stats_; }

 private:
  std::string name_;
  Parameter<T>* gamma_ = nullptr;
  Parameter<T>* beta_ = nullptr;
  BatchNormStats<T> stats_;
  double eps_ = 1e-5;
  double momentum_ = 0.99;
};

}  // namespace gforge::nn
