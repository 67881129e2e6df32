#include "gforge/nn/discriminator.h"

#include <string>

#include "gforge/error.h"

namespace gforge::nn {

void DiscriminatorConfig::validate() const {
  if (in_channels != 4) fail_invalid("discriminator input has 4 channels (rgb + depth)");
  if (widths.size() != 6) fail_invalid("discriminator needs 6 tower widths");
  for (int w : widths) {
    if (w < 1) fail_invalid("discriminator widths must be positive");
  }
  if (!(d_max > 0.0)) fail_invalid("d_max must be positive");
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  for (int t = 0; t < 2; ++t) {
    std::vector<ConvLayer<T>>& tower = t == 0 ? full_ : half_;
    const std::string prefix = t == 0 ? "disc.full" : "disc.half";
    int c = config_.in_channels;
    for (int i = 0; i < 7; ++i) {
      typename ConvLayer<T>::Options o;
      o.kind = ConvKind::kStandard;
      o.kernel = 4;
      o.spectral_norm = config_.spectral_norm;
      if (i < 5) {
        o.stride = 2;
        o.pad = 1;
      } else {
        o.stride = 1;
        o.same = true;
      }
      const int out = i < 6 ? config_.widths[static_cast<std::size_t>(i)] : 1;
      tower.emplace_back(store_, prefix + ".conv" + std::to_string(i), c, out, o, rng);
      c = out;
    }
  }
  store_.reset_shadow();
}

template <typename T>
Var<T> Discriminator<T>::run_tower(Tape<T>& tape, std::vector<ConvLayer<T>>& tower, Var<T> x, WeightSource s) {
  const double slope = config_.leaky_slope;
  Var<T> h = x;
  for (std::size_t i = 0; i < tower.size(); ++i) {
    h = tower[i].forward(tape, h, s);
    if (i + 1 == tower.size()) break;
    if (i > 0) h = instance_norm(tape, h, config_.in_eps);
    h = leaky_relu(tape, h, slope);
  }
  return h;
}

template <typename T>
DiscriminatorOutput<T> Discriminator<T>::forward(Tape<T>& tape, Var<T> rgbd, WeightSource s) {
  const Shape shape = tape.value(rgbd).shape();
  if (shape.size() != 4 || shape[3] != config_.in_channels) {
    fail_invalid("discriminator expects 4 input channels, got " + shape_string(shape));
  }
  DiscriminatorOutput<T> out;
  out.full = run_tower(tape, full_, rgbd, s);
  const ConvGeometry pool = conv_geometry_same(shape[1], shape[2], 3, 2);
  out.half = run_tower(tape, half_, avg_pool(tape, rgbd, pool), s);
  return out;
}

template <typename T>
void Discriminator<T>::power_iterate() {
  for (ConvLayer<T>* c : conv_layers()) c->power_iterate();
}

template <typename T>
std::vector<ConvLayer<T>*> Discriminator<T>::conv_layers() {
  std::vector<ConvLayer<T>*> out;
  for (auto& c : full_) out.push_back(&c);
  for (auto& c : half_) out.push_back(&c);
  return out;
}

template <typename T>
Var<T> discriminator_input(Tape<T>& tape, Var<T> rgb, Var<T> depth, double d_max) {
  return concat_channels(tape, rgb, affine(tape, depth, 1.0 / d_max, 0.0));
}

template class Discriminator<float>;
template class Discriminator<double>;
template Var<float> discriminator_input<float>(Tape<float>&, Var<float>, Var<float>, double);
template Var<double> discriminator_input<double>(Tape<double>&, Var<double>, Var<double>, double);

}  // namespace gforge::nn
