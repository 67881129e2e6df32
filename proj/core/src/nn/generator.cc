#include "gforge/nn/generator.h"

#include <cmath>

#include "gforge/error.h"

namespace gforge::nn {

void GeneratorConfig::validate() const {
  if (height < 32 || width < 32 || height % 32 != 0 || width % 32 != 0) {
    fail_invalid("generator input " + std::to_string(width) + "x" + std::to_string(height) +
                 " must have both sides divisible by 32");
  }
  if (stage_widths.size() != 4 || stage_depths.size() != 4) fail_invalid("generator needs exactly 4 stages");
  for (int w : stage_widths) {
    if (w < 1) fail_invalid("stage widths must be positive");
  }
  for (int d : stage_depths) {
    if (d < 1) fail_invalid("stage depths must be at least 1");
  }
  if (stem_width < 1 || head_width < 1 || bottleneck_depth < 1 || bottleneck_width < 0) {
    fail_invalid("generator widths and depths must be positive");
  }
  if (in_channels != 4) fail_invalid("generator input has 4 channels (rgb + depth)");
  if (!(d_max > 0.0) || !(initial_depth > 0.0)) fail_invalid("d_max and initial_depth must be positive");
}

namespace {

template <typename T>
typename ConvLayer<T>::Options conv_options(ConvKind kind, int kernel, int stride, int pad, bool sn) {
  typename ConvLayer<T>::Options o;
  o.kind = kind;
  o.kernel = kernel;
  o.stride = stride;
  o.pad = pad;
  o.spectral_norm = sn;
  return o;
}

template <typename T>
void mask_max(Tensor<T>& a, const Tensor<T>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::max(a[i], b[i]);
}

}  // namespace

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const bool sn = config_.spectral_norm;
  const double eps = config_.bn_eps;
  const double mom = config_.bn_momentum;
  const auto pconv3 = [&](int stride) { return conv_options<T>(ConvKind::kPartial, 3, stride, 1, sn); };

  stem_ = ConvLayer<T>(store_, "enc.stem", config_.in_channels, config_.stem_width, pconv3(2), rng);
  stem_bn_ = BatchNormLayer<T>(store_, "enc.stem.bn", config_.stem_width, eps, mom);

  int c = config_.stem_width;
  stages_.resize(4);
  for (int s = 0; s < 4; ++s) {
    const int width = config_.stage_widths[static_cast<std::size_t>(s)];
    for (int b = 0; b < config_.stage_depths[static_cast<std::size_t>(s)]; ++b) {
      const std::string name = "enc.stage" + std::to_string(s) + ".block" + std::to_string(b);
      const int stride = b == 0 ? 2 : 1;
      ResBlock blk;
      blk.conv1 = ConvLayer<T>(store_, name + ".conv1", c, width, pconv3(stride), rng);
      blk.bn1 = BatchNormLayer<T>(store_, name + ".bn1", width, eps, mom);
      blk.conv2 = ConvLayer<T>(store_, name + ".conv2", width, width, pconv3(1), rng);
      blk.bn2 = BatchNormLayer<T>(store_, name + ".bn2", width, eps, mom);
      blk.project = stride != 1 || c != width;
      if (blk.project) {
        blk.shortcut = ConvLayer<T>(store_, name + ".shortcut", c, width,
                                    conv_options<T>(ConvKind::kPartial, 1, stride, 0, sn), rng);
        blk.bn_shortcut = BatchNormLayer<T>(store_, name + ".shortcut.bn", width, eps, mom);
      }
      stages_[static_cast<std::size_t>(s)].push_back(std::move(blk));
      c = width;
    }
  }

  const int bw = config_.bottleneck_width > 0 ? config_.bottleneck_width : c;
  for (int i = 0; i < config_.bottleneck_depth; ++i) {
    const bool last = i == config_.bottleneck_depth - 1;
    const int out = last ? c : (i == 1 ? 2 * bw : bw);
    const std::string name = "bottleneck.block" + std::to_string(i);
    const int in = bottleneck_.empty() ? c : bottleneck_.back().conv.out_channels();
    BottleneckBlock blk;
    blk.bn = BatchNormLayer<T>(store_, name + ".bn", in, eps, mom);
    blk.conv = ConvLayer<T>(store_, name + ".conv", in, out,
                            conv_options<T>(ConvKind::kStandard, 3, 1, 1, sn), rng);
    bottleneck_.push_back(std::move(blk));
  }

  build_decoder(rgb_decoder_, "dec_rgb", 3, rng);
  build_decoder(depth_decoder_, "dec_depth", 1, rng);

  // softplus(b) = initial_depth on a zero pre-activation.
  Parameter<T>* bias = depth_decoder_.head_conv.back().bias();
  const double b0 = std::log(std::expm1(config_.initial_depth));
  bias->value.fill(static_cast<T>(b0));
  store_.reset_shadow();
}

template <typename T>
void Generator<T>::build_decoder(Decoder& d, const std::string& name, int out_channels, std::mt19937_64& rng) {
  const bool sn = config_.spectral_norm;
  const double eps = config_.bn_eps;
  const double mom = config_.bn_momentum;
  const std::vector<int> widths{config_.stage_widths[2], config_.stage_widths[1], config_.stage_widths[0],
                                config_.stem_width, config_.head_width};
  const std::vector<int> skip_widths{config_.stage_widths[2], config_.stage_widths[1], config_.stage_widths[0],
                                     config_.stem_width};
  int c = config_.stage_widths[3];
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string n = name + ".up" + std::to_string(i);
    const int w = widths[i];
    UpBlock u;
    u.up = ConvLayer<T>(store_, n + ".tconv", c, w, conv_options<T>(ConvKind::kTransposed, 4, 2, 1, sn), rng);
    u.bn_up = BatchNormLayer<T>(store_, n + ".tconv.bn", w, eps, mom);
    u.has_skip = i < skip_widths.size();
    if (u.has_skip) {
      u.skip = ConvLayer<T>(store_, n + ".skip", skip_widths[i], w,
                            conv_options<T>(ConvKind::kStandard, 1, 1, 0, sn), rng);
    }
    u.conv = ConvLayer<T>(store_, n + ".conv", w, w, conv_options<T>(ConvKind::kStandard, 3, 1, 1, sn), rng);
    u.bn = BatchNormLayer<T>(store_, n + ".bn", w, eps, mom);
    d.ups.push_back(std::move(u));
    c = w;
  }
  for (int i = 0; i < 3; ++i) {
    const std::string n = name + ".head" + std::to_string(i);
    const int out = i == 2 ? out_channels : config_.head_width;
    d.head_bn.emplace_back(store_, n + ".bn", c, eps, mom);
    d.head_conv.emplace_back(store_, n + ".conv", c, out, conv_options<T>(ConvKind::kStandard, 3, 1, 1, sn), rng);
    c = out;
  }
}

template <typename T>
Var<T> Generator<T>::run_resblock(Tape<T>& tape, ResBlock& b, Var<T> x, Tensor<T>& mask, WeightSource s,
                                  bool train) {
  const double slope = config_.leaky_slope;
  Tensor<T> m1;
  Tensor<T> m2;
  Var<T> h = b.conv1.forward(tape, x, s, &mask, &m1);
  h = leaky_relu(tape, b.bn1.forward(tape, h, s, train), slope);
  h = b.conv2.forward(tape, h, s, &m1, &m2);
  h = b.bn2.forward(tape, h, s, train);
  Var<T> sc = x;
  Tensor<T> ms = mask;
  if (b.project) {
    Tensor<T> tmp;
    sc = b.shortcut.forward(tape, x, s, &mask, &tmp);
    sc = b.bn_shortcut.forward(tape, sc, s, train);
    ms = std::move(tmp);
  }
  mask_max(m2, ms);
  mask = std::move(m2);
  return leaky_relu(tape, add(tape, h, sc), slope);
}

template <typename T>
Var<T> Generator<T>::run_decoder(Tape<T>& tape, Decoder& d, Var<T> h, const std::vector<Var<T>>& taps,
                                 WeightSource s, bool train) {
  const double slope = config_.leaky_slope;
  for (std::size_t i = 0; i < d.ups.size(); ++i) {
    UpBlock& u = d.ups[i];
    h = leaky_relu(tape, u.bn_up.forward(tape, u.up.forward(tape, h, s), s, train), slope);
    if (u.has_skip) h = add(tape, h, u.skip.forward(tape, taps[taps.size() - 1 - i], s));
    h = leaky_relu(tape, u.bn.forward(tape, u.conv.forward(tape, h, s), s, train), slope);
  }
  for (std::size_t i = 0; i < d.head_conv.size(); ++i) {
    h = d.head_conv[i].forward(tape, d.head_bn[i].forward(tape, h, s, train), s);
    if (i + 1 < d.head_conv.size()) h = leaky_relu(tape, h, slope);
  }
  return h;
}

template <typename T>
GeneratorOutput<T> Generator<T>::forward(Tape<T>& tape, Var<T> input, const Tensor<T>& mask, WeightSource s,
                                         bool train) {
  const Tensor<T>& iv = tape.value(input);
  if (iv.rank() != 4 || iv.dim(1) != config_.height || iv.dim(2) != config_.width ||
      iv.dim(3) != config_.in_channels) {
    fail_invalid("generator expects input (N, " + std::to_string(config_.height) + ", " +
                 std::to_string(config_.width) + ", 4), got " + shape_string(iv.shape()));
  }
  const double slope = config_.leaky_slope;
  Tensor<T> m;
  Var<T> h = stem_.forward(tape, input, s, &mask, &m);
  h = leaky_relu(tape, stem_bn_.forward(tape, h, s, train), slope);
  std::vector<Var<T>> taps{h};
  for (std::size_t si = 0; si < stages_.size(); ++si) {
    for (ResBlock& b : stages_[si]) h = run_resblock(tape, b, h, m, s, train);
    if (si + 1 < stages_.size()) taps.push_back(h);
  }
  for (std::size_t i = 0; i < bottleneck_.size(); ++i) {
    h = bottleneck_[i].conv.forward(tape, bottleneck_[i].bn.forward(tape, h, s, train), s);
    if (i + 1 < bottleneck_.size()) h = leaky_relu(tape, h, slope);
  }
  GeneratorOutput<T> out;
  out.rgb = sigmoid(tape, run_decoder(tape, rgb_decoder_, h, taps, s, train));
  out.depth = softplus(tape, run_decoder(tape, depth_decoder_, h, taps, s, train));
  return out;
}

template <typename T>
std::vector<ConvLayer<T>*> Generator<T>::conv_layers() {
  std::vector<ConvLayer<T>*> out{&stem_};
  for (auto& stage : stages_) {
    for (ResBlock& b : stage) {
      out.push_back(&b.conv1);
      out.push_back(&b.conv2);
      if (b.project) out.push_back(&b.shortcut);
    }
  }
  for (auto& b : bottleneck_) out.push_back(&b.conv);
  for (Decoder* d : {&rgb_decoder_, &depth_decoder_}) {
    for (UpBlock& u : d->ups) {
      out.push_back(&u.up);
      if (u.has_skip) out.push_back(&u.skip);
      out.push_back(&u.conv);
    }
    for (auto& c : d->head_conv) out.push_back(&c);
  }
  return out;
}

template <typename T>
std::vector<BatchNormLayer<T>*> Generator<T>::norm_layers() {
  std::vector<BatchNormLayer<T>*> out{&stem_bn_};
  for (auto& stage : stages_) {
    for (ResBlock& b : stage) {
      out.push_back(&b.bn1);
      out.push_back(&b.bn2);
      if (b.project) out.push_back(&b.bn_shortcut);
    }
  }
  for (auto& b : bottleneck_) out.push_back(&b.bn);
  for (Decoder* d : {&rgb_decoder_, &depth_decoder_}) {
    for (UpBlock& u : d->ups) {
      out.push_back(&u.bn_up);
      out.push_back(&u.bn);
    }
    for (auto& b : d->head_bn) out.push_back(&b);
  }
  return out;
}

template <typename T>
void Generator<T>::power_iterate() {
  for (ConvLayer<T>* c : conv_layers()) c->power_iterate();
}

template <typename T>
void Generator<T>::power_iterate_shadow() {
  for (ConvLayer<T>* c : conv_layers()) c->power_iterate_shadow();
}

template class Generator<float>;
template class Generator<double>;

}  // namespace gforge::nn
