#include "gforge/nn/losses.h"

#include "gforge/error.h"

namespace gforge::nn {
namespace {

template <typename T>
Var<T> tower_average(Tape<T>& tape, const std::vector<Var<T>>& terms) {
  Var<T> acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(tape, acc, terms[i]);
  return affine(tape, acc, 1.0 / static_cast<double>(terms.size()), 0.0);
}

}  // namespace

template <typename T>
Var<T> generator_loss(Tape<T>& tape, const std::vector<Var<T>>& fake_logits, Var<T> pred_depth,
                      const Tensor<T>& target_depth, const Tensor<T>& target_valid, const LossWeights& weights,
                      double* depth_l1) {
  if (fake_logits.empty()) fail_invalid("generator loss needs at least one logit map");
  std::vector<Var<T>> means;
  for (Var<T> l : fake_logits) means.push_back(mean(tape, l));
  const Var<T> adv = tower_average(tape, means);
  const Var<T> l1 = masked_l1_mean(tape, pred_depth, target_depth, target_valid);
  if (depth_l1) *depth_l1 = static_cast<double>(tape.value(l1)[0]);
  return weighted_sum(tape, adv, -weights.gan, l1, weights.depth);
}

template <typename T>
Var<T> discriminator_loss(Tape<T>& tape, const std::vector<Var<T>>& real_logits,
                          const std::vector<Var<T>>& fake_logits) {
  if (real_logits.empty() || real_logits.size() != fake_logits.size()) {
    fail_invalid("discriminator loss needs matching real and fake logit maps");
  }
  std::vector<Var<T>> towers;
  for (std::size_t i = 0; i < real_logits.size(); ++i) {
    const Var<T> real = mean(tape, min_zero(tape, affine(tape, real_logits[i], 1.0, -1.0)));
    const Var<T> fake = mean(tape, min_zero(tape, affine(tape, fake_logits[i], -1.0, -1.0)));
    towers.push_back(weighted_sum(tape, real, -1.0, fake, -1.0));
  }
  return tower_average(tape, towers);
}

template <typename T>
LossValues losses(const Tensor<T>& pred_depth, const Tensor<T>& real_depth, const Tensor<T>& real_valid,
                  const std::vector<Tensor<T>>& fake_logits, const std::vector<Tensor<T>>& real_logits,
                  const LossWeights& weights) {
  Tape<T> tape;
  std::vector<Var<T>> fake;
  std::vector<Var<T>> real;
  for (const auto& t : fake_logits) fake.push_back(tape.constant_ref(t));
  for (const auto& t : real_logits) real.push_back(tape.constant_ref(t));
  LossValues out;
  const Var<T> pred = tape.constant_ref(pred_depth);
  out.generator = tape.value(generator_loss(tape, fake, pred, real_depth, real_valid, weights, &out.depth_l1))[0];
  out.discriminator = tape.value(discriminator_loss(tape, real, fake))[0];
  double adv = 0.0;
  for (const auto& t : fake_logits) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
    adv += s / static_cast<double>(t.size());
  }
  out.adversarial = adv / static_cast<double>(fake_logits.size());
  return out;
}

#define GFORGE_INSTANTIATE_LOSSES(T)                                                                          \
  template Var<T> generator_loss<T>(Tape<T>&, const std::vector<Var<T>>&, Var<T>, const Tensor<T>&,            \
                                    const Tensor<T>&, const LossWeights&, double*);                           \
  template Var<T> discriminator_loss<T>(Tape<T>&, const std::vector<Var<T>>&, const std::vector<Var<T>>&);     \
  template LossValues losses<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                          \
                                const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&, const LossWeights&);

GFORGE_INSTANTIATE_LOSSES(float)
GFORGE_INSTANTIATE_LOSSES(double)

#undef GFORGE_INSTANTIATE_LOSSES

}  // namespace gforge::nn
