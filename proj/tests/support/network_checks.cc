#include "network_checks.h"

#include "gforge/nn/losses.h"
#include "oracles.h"

namespace gforge::testing {
namespace {

std::vector<nn::Parameter<double>*> joined(nn::ParameterStore<double>& a, nn::ParameterStore<double>& b) {
  std::vector<nn::Parameter<double>*> out = a.all();
  for (auto* p : b.all()) out.push_back(p);
  return out;
}

}  // namespace

std::size_t MicroGan::parameter_count() const {
  return gen->params().parameter_count() + disc->params().parameter_count();
}

nn::TrainBatch<double> random_train_batch(int n, int h, int w, std::uint64_t seed) {
  nn::TrainBatch<double> b;
  b.mask = random_tensor({n, h, w, 1}, seed, 0.0, 1.0);
  for (double& v : b.mask.values()) v = v < 0.4 ? 1.0 : 0.0;
  b.input = random_tensor({n, h, w, 4}, seed + 1, 0.0, 1.0);
  for (std::size_t p = 0; p < b.mask.size(); ++p) {
    for (int c = 0; c < 4; ++c) b.input[p * 4 + c] *= b.mask[p];
  }
  b.target_rgb = random_tensor({n, h, w, 3}, seed + 2, 0.0, 1.0);
  b.target_depth = random_tensor({n, h, w, 1}, seed + 3, 0.5, 5.0);
  b.target_valid = nn::Tensor<double>({n, h, w, 1}, 1.0);
  return b;
}

MicroGan make_micro_gan(std::uint64_t seed, int size) {
  MicroGan g;
  nn::GeneratorConfig gc = micro_generator_config(seed);
  gc.height = size;
  gc.width = size;
  g.gen = std::make_unique<nn::Generator<double>>(gc);
  g.disc = std::make_unique<nn::Discriminator<double>>(micro_discriminator_config(seed + 1));
  g.batch = random_train_batch(2, size, size, seed + 2);
  return g;
}

GradCheckReport check_generator_loss(MicroGan& gan, bool include_discriminator) {
  const double d_max = gan.gen->config().d_max;
  const auto params = include_discriminator ? joined(gan.gen->params(), gan.disc->params()) : gan.gen->params().all();
  return check_gradients(params, [&](nn::Tape<double>& t) {
    const auto fake = gan.gen->forward(t, t.constant_ref(gan.batch.input), gan.batch.mask, nn::WeightSource::kLive, true);
    const auto d = gan.disc->forward(t, nn::discriminator_input(t, fake.rgb, fake.depth, d_max), nn::WeightSource::kLive);
    return nn::generator_loss(t, {d.full, d.half}, fake.depth, gan.batch.target_depth, gan.batch.target_valid,
                              nn::LossWeights{});
  });
}

GradCheckReport check_discriminator_loss(MicroGan& gan) {
  const double d_max = gan.gen->config().d_max;
  return check_gradients(joined(gan.disc->params(), gan.gen->params()), [&](nn::Tape<double>& t) {
    const auto fake = gan.gen->forward(t, t.constant_ref(gan.batch.input), gan.batch.mask, nn::WeightSource::kLive, true);
    const auto df = gan.disc->forward(t, nn::discriminator_input(t, fake.rgb, fake.depth, d_max), nn::WeightSource::kLive);
    const auto real_in = nn::discriminator_input(t, t.constant_ref(gan.batch.target_rgb),
                                                 t.constant_ref(gan.batch.target_depth), d_max);
    const auto dr = gan.disc->forward(t, real_in, nn::WeightSource::kLive);
    return nn::discriminator_loss(t, {dr.full, dr.half}, {df.full, df.half});
  });
}

GradCheckReport check_discriminator_alone(int size, std::uint64_t seed) {
  nn::Discriminator<double> disc(micro_discriminator_config(seed));
  const nn::Tensor<double> real = random_tensor({2, size, size, 4}, seed + 1, 0.0, 1.0);
  const nn::Tensor<double> fake = random_tensor({2, size, size, 4}, seed + 2, 0.0, 1.0);
  return check_gradients(disc.params().all(), [&](nn::Tape<double>& t) {
    const auto dr = disc.forward(t, t.constant_ref(real), nn::WeightSource::kLive);
    const auto df = disc.forward(t, t.constant_ref(fake), nn::WeightSource::kLive);
    return nn::discriminator_loss(t, {dr.full, dr.half}, {df.full, df.half});
  });
}

}  // namespace gforge::testing
