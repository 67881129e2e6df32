#pragma once

#include <cstdint>
#include <memory>

#include "gforge/nn/discriminator.h"
#include "gforge/nn/generator.h"
#include "gforge/nn/trainer.h"
#include "gradcheck.h"

namespace gforge::testing {

// Micro generator and discriminator with one fixed random batch (batch 2,
// 40% of guidance pixels valid).
struct MicroGan {
  std::unique_ptr<nn::Generator<double>> gen;
  std::unique_ptr<nn::Discriminator<double>> disc;
  nn::TrainBatch<double> batch;
  std::size_t parameter_count() const;
};

MicroGan make_micro_gan(std::uint64_t seed = 3, int size = 32);

nn::TrainBatch<double> random_train_batch(int n, int h, int w, std::uint64_t seed);

// Central-difference checks of the generator loss (live discriminator) and
// of the hinge loss, each over every generator and discriminator parameter.
// At 32x32 both discriminator towers end in instance norms over 1x1 maps, so
// their logits are constant; the adversarial path into the generator is
// covered by the 64x64 generator-only variant.
GradCheckReport check_generator_loss(MicroGan& gan, bool include_discriminator = true);
GradCheckReport check_discriminator_loss(MicroGan& gan);

// Hinge loss of the micro discriminator alone on random real/fake inputs of
// the given size. At 32x32 the last instance norms of both towers see 1x1
// maps and pass no gradient, so this larger-input check covers those layers.
GradCheckReport check_discriminator_alone(int size, std::uint64_t seed = 5);

}  // namespace gforge::testing
