#include "gforge/nn/trainer.h"

#include <cmath>

#include "gforge/error.h"

namespace gforge::nn {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail_numerical(std::string("non-finite ") + what + " loss");
}

}  // namespace

template <typename T>
void guidance_to_tensors(const GuidanceImage& g, double d_max, Tensor<T>& input, Tensor<T>& mask) {
  const int h = g.height();
  const int w = g.width();
  input = Tensor<T>({1, h, w, 4}, T(0));
  mask = Tensor<T>({1, h, w, 1}, T(0));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!g.valid.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) input.at(0, y, x, c) = static_cast<T>(g.rgb.at(x, y, c));
      input.at(0, y, x, 3) = static_cast<T>(g.depth.at(x, y) / d_max);
      mask.at(0, y, x, 0) = T(1);
    }
  }
}

template <typename T>
TrainBatch<T> make_batch(const std::vector<GuidanceImage>& guidance, const std::vector<RgbdFrame>& targets,
                         double d_max) {
  if (guidance.empty() || guidance.size() != targets.size()) {
    fail_invalid("a batch needs matching, nonempty guidance and target lists");
  }
  const int n = static_cast<int>(guidance.size());
  const int h = guidance.front().height();
  const int w = guidance.front().width();
  TrainBatch<T> b;
  b.input = Tensor<T>({n, h, w, 4}, T(0));
  b.mask = Tensor<T>({n, h, w, 1}, T(0));
  b.target_rgb = Tensor<T>({n, h, w, 3}, T(0));
  b.target_depth = Tensor<T>({n, h, w, 1}, T(0));
  b.target_valid = Tensor<T>({n, h, w, 1}, T(0));
  for (int i = 0; i < n; ++i) {
    const GuidanceImage& g = guidance[static_cast<std::size_t>(i)];
    const RgbdFrame& t = targets[static_cast<std::size_t>(i)];
    if (g.width() != w || g.height() != h || t.rgb.width() != w || t.rgb.height() != h) {
      fail_invalid("batch images must share one size");
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (g.valid.at(x, y)) {
          for (int c = 0; c < 3; ++c) b.input.at(i, y, x, c) = static_cast<T>(g.rgb.at(x, y, c));
          b.input.at(i, y, x, 3) = static_cast<T>(g.depth.at(x, y) / d_max);
          b.mask.at(i, y, x, 0) = T(1);
        }
        for (int c = 0; c < 3; ++c) b.target_rgb.at(i, y, x, c) = static_cast<T>(t.rgb.at(x, y, c));
        if (t.valid.at(x, y)) {
          b.target_depth.at(i, y, x, 0) = static_cast<T>(t.depth.at(x, y));
          b.target_valid.at(i, y, x, 0) = T(1);
        }
      }
    }
  }
  return b;
}

template <typename T>
Trainer<T>::Trainer(const TrainConfig& config) : config_(config) {
  if (config.discriminator_steps < 0) fail_invalid("discriminator_steps must be nonnegative");
  gen_ = std::make_unique<Generator<T>>(config.generator);
  disc_ = std::make_unique<Discriminator<T>>(config.discriminator);
  g_opt_ = std::make_unique<Adam<T>>(gen_->params(), config.generator_adam);
  d_opt_ = std::make_unique<Adam<T>>(disc_->params(), config.discriminator_adam);
}

template <typename T>
StepStats Trainer<T>::train_step(const TrainBatch<T>& batch) {
  const GeneratorConfig& gc = config_.generator;
  if (batch.input.rank() != 4 || batch.input.dim(1) != gc.height || batch.input.dim(2) != gc.width) {
    fail_invalid("batch shape " + shape_string(batch.input.shape()) + " does not match the generator");
  }
  StepStats stats;
  gen_->power_iterate();
  gen_->params().zero_grad();

  Tape<T> gtape;
  const Var<T> input = gtape.constant_ref(batch.input);
  const GeneratorOutput<T> fake = gen_->forward(gtape, input, batch.mask, WeightSource::kLive, true);
  const Var<T> fake_in = discriminator_input(gtape, fake.rgb, fake.depth, config_.discriminator.d_max);
  const Tensor<T> fake_value = gtape.value(fake_in);

  Tensor<T> real_value({batch.input.dim(0), gc.height, gc.width, 4});
  {
    Tape<T> t;
    const Var<T> r = discriminator_input(t, t.constant_ref(batch.target_rgb), t.constant_ref(batch.target_depth),
                                         config_.discriminator.d_max);
    real_value = t.value(r);
  }

  for (int k = 0; k < config_.discriminator_steps; ++k) {
    disc_->power_iterate();
    disc_->params().zero_grad();
    Tape<T> dtape;
    const DiscriminatorOutput<T> real = disc_->forward(dtape, dtape.constant_ref(real_value), WeightSource::kLive);
    const DiscriminatorOutput<T> fk = disc_->forward(dtape, dtape.constant_ref(fake_value), WeightSource::kLive);
    const Var<T> loss = discriminator_loss(dtape, {real.full, real.half}, {fk.full, fk.half});
    stats.discriminator_loss = dtape.value(loss)[0];
    require_finite(stats.discriminator_loss, "discriminator");
    dtape.backward(loss);
    d_opt_->step();
  }

  disc_->power_iterate();
  const DiscriminatorOutput<T> judged = disc_->forward(gtape, fake_in, WeightSource::kFrozen);
  const Var<T> gloss = generator_loss(gtape, {judged.full, judged.half}, fake.depth, batch.target_depth,
                                      batch.target_valid, config_.loss, &stats.depth_l1);
  stats.generator_loss = gtape.value(gloss)[0];
  for (Var<T> tower : {judged.full, judged.half}) {
    const Tensor<T>& logits = gtape.value(tower);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += logits[i];
    stats.adversarial += 0.5 * sum / static_cast<double>(logits.size());
  }
  require_finite(stats.generator_loss, "generator");
  gtape.backward(gloss);
  g_opt_->step();

  ema_update(gen_->params(), config_.ema_decay);
  gen_->power_iterate_shadow();
  stats.step = ++step_;
  return stats;
}

template void guidance_to_tensors<float>(const GuidanceImage&, double, Tensor<float>&, Tensor<float>&);
template void guidance_to_tensors<double>(const GuidanceImage&, double, Tensor<double>&, Tensor<double>&);
template TrainBatch<float> make_batch<float>(const std::vector<GuidanceImage>&, const std::vector<RgbdFrame>&,
                                             double);
template TrainBatch<double> make_batch<double>(const std::vector<GuidanceImage>&, const std::vector<RgbdFrame>&,
                                               double);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace gforge::nn
