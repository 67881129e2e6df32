#include "gforge/nn/layers.h"

#include <cmath>

#include "gforge/error.h"

namespace gforge::nn {

template <typename T>
Parameter<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (by_name_.count(name)) fail_invalid("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter<T>>();
  p->name = name;
  p->value = std::move(value);
  p->shadow = p->value;
  Parameter<T>& ref = *p;
  by_name_[name] = p.get();
  params_.push_back(std::move(p));
  return ref;
}

template <typename T>
Parameter<T>* ParameterStore<T>::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

template <typename T>
const Parameter<T>* ParameterStore<T>::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

template <typename T>
std::vector<Parameter<T>*> ParameterStore<T>::all() {
  std::vector<Parameter<T>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> ParameterStore<T>::all() const {
  std::vector<const Parameter<T>*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

template <typename T>
std::size_t ParameterStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p->grad = Tensor<T>(p->value.shape(), T(0));
}

template <typename T>
void ParameterStore<T>::reset_shadow() {
  for (auto& p : params_) p->shadow = p->value;
}

template <typename T>
Var<T> bind(Tape<T>& tape, Parameter<T>& p, WeightSource source) {
  switch (source) {
    case WeightSource::kLive: return tape.parameter(p);
    case WeightSource::kFrozen: return tape.constant_ref(p.value);
    case WeightSource::kShadow: return tape.constant_ref(p.shadow);
  }
  return -1;
}

template <typename T>
ConvLayer<T>::ConvLayer(ParameterStore<T>& store, const std::string& name, int in_channels, int out_channels,
                        const Options& options, std::mt19937_64& rng)
    : name_(name), options_(options), in_channels_(in_channels), out_channels_(out_channels) {
  if (in_channels < 1 || out_channels < 1) fail_invalid("layer " + name + " needs positive channel counts");
  const int k = options.kernel;
  const bool transposed = options.kind == ConvKind::kTransposed;
  Shape shape = transposed ? Shape{k, k, out_channels, in_channels} : Shape{k, k, in_channels, out_channels};
  const double fan_in = static_cast<double>(k) * k * in_channels;
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  Tensor<T> w(shape);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(normal(rng));
  weight_ = &store.add(name + ".weight", std::move(w));
  if (options.bias) bias_ = &store.add(name + ".bias", Tensor<T>({out_channels}, T(0)));
  if (options.spectral_norm) {
    sn_ = init_spectral_state(weight_->value, rng());
    sn_shadow_ = sn_;
  }
}

template <typename T>
ConvGeometry ConvLayer<T>::geometry(int in_h, int in_w) const {
  if (options_.kind == ConvKind::kTransposed) {
    return transposed_geometry(in_h, in_w, options_.kernel, options_.stride, options_.pad);
  }
  if (options_.same) return conv_geometry_same(in_h, in_w, options_.kernel, options_.stride);
  return conv_geometry(in_h, in_w, options_.kernel, options_.stride, options_.pad);
}

template <typename T>
Var<T> ConvLayer<T>::forward(Tape<T>& tape, Var<T> x, WeightSource source, const Tensor<T>* mask,
                             Tensor<T>* mask_out) {
  const Shape in_shape = tape.value(x).shape();
  if (in_shape.size() != 4 || in_shape[3] != in_channels_) {
    fail_invalid("layer " + name_ + " expects " + std::to_string(in_channels_) + " input channels, got " +
                 shape_string(in_shape));
  }
  Var<T> w = bind(tape, *weight_, source);
  if (options_.spectral_norm) {
    const SpectralState<T>& s = source == WeightSource::kShadow ? sn_shadow_ : sn_;
    w = spectral_weight(tape, w, s.u, s.v);
  }
  const Var<T> b = bias_ ? bind(tape, *bias_, source) : -1;
  const ConvGeometry g = geometry(in_shape[1], in_shape[2]);
  switch (options_.kind) {
    case ConvKind::kStandard: return conv2d(tape, x, w, b, g);
    case ConvKind::kTransposed: return conv_transpose2d(tape, x, w, b, g);
    case ConvKind::kPartial:
      if (!mask) fail_invalid("partial layer " + name_ + " needs a mask");
      return partial_conv2d(tape, x, *mask, w, b, g, mask_out);
  }
  return -1;
}

template <typename T>
void ConvLayer<T>::power_iterate() {
  if (options_.spectral_norm) power_step(weight_->value, sn_);
}

template <typename T>
void ConvLayer<T>::power_iterate_shadow() {
  if (options_.spectral_norm) power_step(weight_->shadow, sn_shadow_);
}

template <typename T>
BatchNormLayer<T>::BatchNormLayer(ParameterStore<T>& store, const std::string& name, int channels, double eps,
                                  double momentum)
    : name_(name), eps_(eps), momentum_(momentum) {
  gamma_ = &store.add(name + ".gamma", Tensor<T>({channels}, T(1)));
  beta_ = &store.add(name + ".beta", Tensor<T>({channels}, T(0)));
  stats_.running_mean = Tensor<T>({channels}, T(0));
  stats_.running_var = Tensor<T>({channels}, T(1));
}

template <typename T>
Var<T> BatchNormLayer<T>::forward(Tape<T>& tape, Var<T> x, WeightSource source, bool train) {
  return batch_norm(tape, x, bind(tape, *gamma_, source), bind(tape, *beta_, source), stats_, train, eps_,
                    momentum_);
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class ConvLayer<float>;
template class ConvLayer<double>;
template class BatchNormLayer<float>;
template class BatchNormLayer<double>;
template Var<float> bind<float>(Tape<float>&, Parameter<float>&, WeightSource);
template Var<double> bind<double>(Tape<double>&, Parameter<double>&, WeightSource);

}  // namespace gforge::nn
