#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gforge/image.h"
#include "gforge/nn/discriminator.h"
#include "gforge/nn/generator.h"
#include "gforge/nn/losses.h"
#include "gforge/nn/optim.h"

namespace gforge::nn {

struct TrainConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  AdamConfig generator_adam{1e-4, 0.5, 0.999, 1e-8};
  AdamConfig discriminator_adam{4e-4, 0.5, 0.999, 1e-8};
  LossWeights loss;
  int discriminator_steps = 2;
  double ema_decay = kEmaDecay;
};

// One batch in NHWC. `input` holds rgb and depth / d_max of the (masked)
// guidance, `mask` its validity; targets are in meters with their own
// validity.
template <typename T>
struct TrainBatch {
  Tensor<T> input;         // (N, H, W, 4)
  Tensor<T> mask;          // (N, H, W, 1)
  Tensor<T> target_rgb;    // (N, H, W, 3)
  Tensor<T> target_depth;  // (N, H, W, 1)
  Tensor<T> target_valid;  // (N, H, W, 1)

  int batch_size() const { return input.dim(0); }
};

struct StepStats {
  std::int64_t step = 0;
  double generator_loss = 0.0;
  double discriminator_loss = 0.0;  // last discriminator update
  double depth_l1 = 0.0;
  double adversarial = 0.0;
};

// (1, H, W, 4) generator input and (1, H, W, 1) mask from a guidance image.
template <typename T>
void guidance_to_tensors(const GuidanceImage& g, double d_max, Tensor<T>& input, Tensor<T>& mask);

template <typename T>
TrainBatch<T> make_batch(const std::vector<GuidanceImage>& guidance, const std::vector<RgbdFrame>& targets,
                         double d_max);

// Generator and discriminator with their optimizers. Each step: one
// generator forward, `discriminator_steps` discriminator updates on that
// fake batch, one generator update against the frozen discriminator, then
// the EMA update of the generator shadow weights.
template <typename T>
class Trainer {
 public:
  explicit Trainer(const TrainConfig& config);

  // Throws a numerical error, before applying the offending update, when a
  // loss is not finite.
  StepStats train_step(const TrainBatch<T>& batch);

  const TrainConfig& config() const { return config_; }
  Generator<T>& generator() { return *gen_; }
  Discriminator<T>& discriminator() { return *disc_; }
  Adam<T>& generator_optimizer() { return *g_opt_; }
  Adam<T>& discriminator_optimizer() { return *d_opt_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  TrainConfig config_;
  std::unique_ptr<Generator<T>> gen_;
  std::unique_ptr<Discriminator<T>> disc_;
  std::unique_ptr<Adam<T>> g_opt_;
  std::unique_ptr<Adam<T>> d_opt_;
  std::int64_t step_ = 0;
};

}  // namespace gforge::nn
