#pragma once

#include <vector>

#include "gforge/nn/discriminator.h"

namespace gforge::nn {

struct LossWeights {
  double gan = 1.0;
  double depth = 100.0;
};

// Generator loss: -gan * mean over towers of mean(D(fake)) + depth * masked
// mean |pred - target|. `depth_l1` receives the unweighted L1 term.
template <typename T>
Var<T> generator_loss(Tape<T>& tape, const std::vector<Var<T>>& fake_logits, Var<T> pred_depth,
                      const Tensor<T>& target_depth, const Tensor<T>& target_valid, const LossWeights& weights,
                      double* depth_l1 = nullptr);

// Hinge loss averaged over towers:
// -mean(min(0, -1 + D(real))) - mean(min(0, -1 - D(fake))).
template <typename T>
Var<T> discriminator_loss(Tape<T>& tape, const std::vector<Var<T>>& real_logits,
                          const std::vector<Var<T>>& fake_logits);

struct LossValues {
  double generator = 0.0;
  double discriminator = 0.0;
  double adversarial = 0.0;  // mean over towers of mean(D(fake))
  double depth_l1 = 0.0;
};

// Value-only evaluation of both losses. Logit lists hold one map per tower.
template <typename T>
LossValues losses(const Tensor<T>& pred_depth, const Tensor<T>& real_depth, const Tensor<T>& real_valid,
                  const std::vector<Tensor<T>>& fake_logits, const std::vector<Tensor<T>>& real_logits,
                  const LossWeights& weights = {});

}  // namespace gforge::nn
