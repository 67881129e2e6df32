#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "gforge/error.h"
#include "gforge/nn/checkpoint.h"
#include "gforge/nn/completer.h"
#include "gforge/nn/trainer.h"
#include "oracles.h"

namespace gforge::nn {
namespace {

using gforge::testing::micro_discriminator_config;
using gforge::testing::micro_generator_config;
using gforge::testing::random_tensor;

Tensor<double> random_mask(const Shape& shape, std::uint64_t seed) {
  Tensor<double> m = random_tensor(shape, seed, 0.0, 1.0);
  for (double& v : m.values()) v = v < 0.4 ? 1.0 : 0.0;
  return m;
}

TrainBatch<double> random_batch(int n, int h, int w, std::uint64_t seed) {
  TrainBatch<double> b;
  b.mask = random_mask({n, h, w, 1}, seed);
  b.input = random_tensor({n, h, w, 4}, seed + 1, 0.0, 1.0);
  for (std::size_t p = 0; p < b.mask.size(); ++p) {
    for (int c = 0; c < 4; ++c) b.input[p * 4 + c] *= b.mask[p];
  }
  b.target_rgb = random_tensor({n, h, w, 3}, seed + 2, 0.0, 1.0);
  b.target_depth = random_tensor({n, h, w, 1}, seed + 3, 0.5, 5.0);
  b.target_valid = Tensor<double>({n, h, w, 1}, 1.0);
  return b;
}

TrainConfig micro_train_config() {
  TrainConfig c;
  c.generator = micro_generator_config();
  c.discriminator = micro_discriminator_config();
  return c;
}

void expect_same_params(const ParameterStore<double>& a, const ParameterStore<double>& b) {
  const auto pa = a.all();
  const auto pb = b.all();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    EXPECT_EQ(pa[i]->shadow, pb[i]->shadow) << pa[i]->name;
  }
}

TEST(Generator, DeskConfigShapes) {
  Generator<double> gen(GeneratorConfig{});
  Tape<double> tape;
  const Tensor<double> mask = random_mask({1, 64, 64, 1}, 1);
  const auto out = gen.forward(tape, tape.constant(random_tensor({1, 64, 64, 4}, 2, 0.0, 1.0)), mask,
                               WeightSource::kLive, true);
  EXPECT_EQ(tape.value(out.rgb).shape(), (Shape{1, 64, 64, 3}));
  EXPECT_EQ(tape.value(out.depth).shape(), (Shape{1, 64, 64, 1}));
}

TEST(Generator, FullyMaskedInputStaysFiniteAndInRange) {
  Generator<double> gen(GeneratorConfig{});
  for (bool train : {true, false}) {
    Tape<double> tape;
    const auto out = gen.forward(tape, tape.constant(Tensor<double>({2, 64, 64, 4}, 0.0)),
                                 Tensor<double>({2, 64, 64, 1}, 0.0), WeightSource::kLive, train);
    const Tensor<double> rgb = tape.value(out.rgb);
    const Tensor<double> depth = tape.value(out.depth);
    EXPECT_TRUE(rgb.all_finite() && depth.all_finite());
    for (double v : rgb.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    for (double v : depth.values()) ASSERT_GT(v, 0.0);
  }
}

TEST(Generator, RejectsSizesNotDivisibleBy32) {
  GeneratorConfig c;
  c.height = 48;
  EXPECT_THROW(Generator<double>{c}, Error);
  Generator<double> gen(GeneratorConfig{});
  Tape<double> tape;
  EXPECT_THROW(gen.forward(tape, tape.constant(Tensor<double>({1, 32, 32, 4})), Tensor<double>({1, 32, 32, 1}),
                           WeightSource::kLive, false),
               Error);
}

TEST(Generator, InitialDepthIsNearTwoMeters) {
  GeneratorConfig c = micro_generator_config();
  Generator<double> gen(c);
  const Parameter<double>* bias = gen.params().find("dec_depth.head2.conv.bias");
  ASSERT_NE(bias, nullptr);
  EXPECT_NEAR(std::log1p(std::exp(bias->value[0])), 2.0, 1e-12);
}

TEST(Discriminator, DeskOutputShapes) {
  Discriminator<double> disc(DiscriminatorConfig{});
  Tape<double> tape;
  const auto out = disc.forward(tape, tape.constant(random_tensor({1, 64, 64, 4}, 3, 0.0, 1.0)), WeightSource::kLive);
  EXPECT_EQ(tape.value(out.full).shape(), (Shape{1, 2, 2, 1}));
  EXPECT_EQ(tape.value(out.half).shape(), (Shape{1, 1, 1, 1}));
}

TEST(Discriminator, ZeroWeightsGiveZeroLogits) {
  DiscriminatorConfig c;
  c.spectral_norm = false;
  Discriminator<double> disc(c);
  for (Parameter<double>* p : disc.params().all()) p->value.fill(0.0);
  Tape<double> tape;
  const auto out = disc.forward(tape, tape.constant(random_tensor({2, 64, 64, 4}, 4, 0.0, 1.0)), WeightSource::kLive);
  for (double v : tape.value(out.full).values()) EXPECT_EQ(v, 0.0);
  for (double v : tape.value(out.half).values()) EXPECT_EQ(v, 0.0);
}

TEST(Discriminator, RejectsWrongChannelCount) {
  Discriminator<double> disc(DiscriminatorConfig{});
  Tape<double> tape;
  EXPECT_THROW(disc.forward(tape, tape.constant(Tensor<double>({1, 64, 64, 3})), WeightSource::kLive), Error);
}

TEST(Losses, DefaultWeights) {
  EXPECT_EQ(LossWeights{}.gan, 1.0);
  EXPECT_EQ(LossWeights{}.depth, 100.0);
  EXPECT_EQ(TrainConfig{}.loss.gan, 1.0);
  EXPECT_EQ(TrainConfig{}.loss.depth, 100.0);
}

TEST(Losses, RealLogitsOfOneContributeNothing) {
  const Tensor<double> d({1, 4, 4, 1}, 2.0);
  const Tensor<double> valid({1, 4, 4, 1}, 1.0);
  const std::vector<Tensor<double>> real{Tensor<double>({1, 2, 2, 1}, 1.0), Tensor<double>({1, 1, 1, 1}, 1.0)};
  const std::vector<Tensor<double>> fake{Tensor<double>({1, 2, 2, 1}, -1.0), Tensor<double>({1, 1, 1, 1}, 0.5)};
  const LossValues v = losses(d, d, valid, fake, real);
  // Full tower: 0 + 0; half tower: 0 - min(0, -1.5) = 1.5.
  EXPECT_EQ(v.discriminator, 0.75);
}

TEST(Losses, ExactDepthLeavesAdversarialTerm) {
  const Tensor<double> d = random_tensor({2, 4, 4, 1}, 5, 0.5, 3.0);
  const Tensor<double> valid({2, 4, 4, 1}, 1.0);
  const std::vector<Tensor<double>> fake{Tensor<double>({2, 2, 2, 1}, 0.25), Tensor<double>({2, 1, 1, 1}, -0.75)};
  const LossValues v = losses(d, d, valid, fake, fake);
  EXPECT_EQ(v.depth_l1, 0.0);
  EXPECT_EQ(v.adversarial, -0.25);
  EXPECT_EQ(v.generator, -1.0 * v.adversarial);
}

TEST(Losses, DepthOffsetOfOneCentimeter) {
  const Tensor<double> target({1, 4, 4, 1}, 0.0);
  const Tensor<double> pred({1, 4, 4, 1}, 0.01);
  const Tensor<double> valid({1, 4, 4, 1}, 1.0);
  const std::vector<Tensor<double>> zero{Tensor<double>({1, 2, 2, 1}, 0.0)};
  const LossValues v = losses(pred, target, valid, zero, zero);
  EXPECT_EQ(v.generator, 1.0);
}

TEST(Losses, DepthTermIgnoresInvalidTargets) {
  Tensor<double> target({1, 2, 2, 1}, 1.0);
  Tensor<double> valid({1, 2, 2, 1}, 1.0);
  Tensor<double> pred({1, 2, 2, 1}, 1.5);
  pred[3] = 40.0;
  valid[3] = 0.0;
  const std::vector<Tensor<double>> zero{Tensor<double>({1, 1, 1, 1}, 0.0)};
  EXPECT_EQ(losses(pred, target, valid, zero, zero).depth_l1, 0.5);
}

TEST(Ema, ClosedFormAfterThousandSteps) {
  const Tensor<double> live = random_tensor({7}, 6, -2.0, 2.0);
  Tensor<double> shadow({7}, 0.0);
  for (int i = 0; i < 1000; ++i) ema_update(shadow, live, 0.999);
  const double factor = 1.0 - std::pow(0.999, 1000);
  for (std::size_t i = 0; i < live.size(); ++i) EXPECT_NEAR(shadow[i], live[i] * factor, 1e-9);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore<double> store;
  Parameter<double>& p = store.add("p", Tensor<double>({3}, std::vector<double>{1.0, 2.0, 3.0}));
  p.grad = Tensor<double>({3}, std::vector<double>{0.5, -2.0, 0.0});
  Adam<double> opt(store, AdamConfig{0.1, 0.5, 0.999, 1e-8});
  opt.step();
  EXPECT_NEAR(p.value[0], 0.9, 1e-7);
  EXPECT_NEAR(p.value[1], 2.1, 1e-7);
  EXPECT_EQ(p.value[2], 3.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Trainer, DefaultHyperparameters) {
  const TrainConfig c;
  EXPECT_EQ(c.generator_adam.lr, 1e-4);
  EXPECT_EQ(c.discriminator_adam.lr, 4e-4);
  EXPECT_EQ(c.generator_adam.beta1, 0.5);
  EXPECT_EQ(c.generator_adam.beta2, 0.999);
  EXPECT_EQ(c.discriminator_steps, 2);
  EXPECT_EQ(c.ema_decay, 0.999);
}

TEST(Trainer, StepIsDeterministic) {
  const TrainBatch<double> batch = random_batch(2, 32, 32, 10);
  Trainer<double> a(micro_train_config());
  Trainer<double> b(micro_train_config());
  for (int i = 0; i < 2; ++i) {
    const StepStats sa = a.train_step(batch);
    const StepStats sb = b.train_step(batch);
    EXPECT_EQ(sa.generator_loss, sb.generator_loss);
    EXPECT_EQ(sa.discriminator_loss, sb.discriminator_loss);
  }
  expect_same_params(a.generator().params(), b.generator().params());
  expect_same_params(a.discriminator().params(), b.discriminator().params());
  EXPECT_EQ(a.generator_optimizer().second_moments(), b.generator_optimizer().second_moments());
}

TEST(Trainer, ShadowFollowsEmaOfLiveWeights) {
  const TrainBatch<double> batch = random_batch(1, 32, 32, 11);
  Trainer<double> t(micro_train_config());
  std::vector<Tensor<double>> before;
  for (const Parameter<double>* p : t.generator().params().all()) before.push_back(p->shadow);
  t.train_step(batch);
  const auto params = t.generator().params().all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < before[i].size(); ++k) {
      EXPECT_EQ(params[i]->shadow[k], static_cast<double>(0.999 * before[i][k] + (1.0 - 0.999) * params[i]->value[k]));
    }
  }
}

TEST(Trainer, ShadowWeightsReceiveNoGradient) {
  Generator<double> gen(micro_generator_config());
  gen.params().zero_grad();
  const TrainBatch<double> batch = random_batch(1, 32, 32, 12);
  Tape<double> tape;
  const auto out = gen.forward(tape, tape.constant_ref(batch.input), batch.mask, WeightSource::kShadow, false);
  const Var<double> loss = mean(tape, add(tape, mean(tape, out.rgb), mean(tape, out.depth)));
  tape.backward(loss);
  for (const Parameter<double>* p : gen.params().all()) {
    for (std::size_t k = 0; k < p->grad.size(); ++k) ASSERT_EQ(p->grad[k], 0.0) << p->name;
  }
}

TEST(Trainer, NonFiniteLossAbortsBeforeUpdate) {
  TrainBatch<double> batch = random_batch(1, 32, 32, 13);
  batch.target_depth[5] = std::numeric_limits<double>::quiet_NaN();
  Trainer<double> t(micro_train_config());
  std::vector<Tensor<double>> before;
  for (const Parameter<double>* p : t.discriminator().params().all()) before.push_back(p->value);
  try {
    t.train_step(batch);
    FAIL() << "expected a numerical error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
  const auto params = t.discriminator().params().all();
  for (std::size_t i = 0; i < params.size(); ++i) EXPECT_EQ(params[i]->value, before[i]);
  EXPECT_EQ(t.step(), 0);
}

TEST(Completer, EvalUsesShadowWeights) {
  Generator<double> gen(micro_generator_config());
  for (Parameter<double>* p : gen.params().all()) {
    for (double& v : p->value.values()) v *= 1.5;
  }
  GuidanceImage g = GuidanceImage::blank(32, 32);
  for (int y = 0; y < 32; y += 2) {
    for (int x = 0; x < 32; ++x) {
      g.valid.at(x, y) = 1;
      g.depth.at(x, y) = 1.0 + 0.01 * x;
      g.rgb.at(x, y, 1) = 0.5;
    }
  }
  const Prediction p = GeneratorCompleter<double>(gen).complete(g, Pose::identity());
  Tensor<double> input, mask;
  guidance_to_tensors(g, gen.config().d_max, input, mask);
  for (WeightSource s : {WeightSource::kShadow, WeightSource::kFrozen}) {
    Tape<double> tape;
    const auto out = gen.forward(tape, tape.constant_ref(input), mask, s, false);
    const Tensor<double> depth = tape.value(out.depth);
    bool same = true;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) same = same && depth.at(0, y, x, 0) == p.depth.at(x, y);
    }
    EXPECT_EQ(same, s == WeightSource::kShadow);
  }
  EXPECT_THROW(GeneratorCompleter<double>(gen).complete(GuidanceImage::blank(64, 64), Pose::identity()), Error);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() /
            ("gforge_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + ".bin");
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(CheckpointTest, RoundTripRestoresFullTrainingState) {
  const TrainBatch<double> batch = random_batch(1, 32, 32, 14);
  Trainer<double> t(micro_train_config());
  t.train_step(batch);
  t.train_step(batch);
  save_checkpoint(path_.string(), t);
  auto loaded = load_checkpoint<double>(path_.string());
  EXPECT_EQ(loaded->step(), 2);
  expect_same_params(t.generator().params(), loaded->generator().params());
  expect_same_params(t.discriminator().params(), loaded->discriminator().params());
  const auto bn_a = t.generator().norm_layers();
  const auto bn_b = loaded->generator().norm_layers();
  for (std::size_t i = 0; i < bn_a.size(); ++i) EXPECT_EQ(bn_a[i]->stats().running_var, bn_b[i]->stats().running_var);
  const auto conv_a = t.generator().conv_layers();
  const auto conv_b = loaded->generator().conv_layers();
  for (std::size_t i = 0; i < conv_a.size(); ++i) {
    EXPECT_EQ(conv_a[i]->spectral_state().u, conv_b[i]->spectral_state().u);
    EXPECT_EQ(conv_a[i]->shadow_spectral_state().v, conv_b[i]->shadow_spectral_state().v);
  }
  const StepStats next_a = t.train_step(batch);
  const StepStats next_b = loaded->train_step(batch);
  EXPECT_EQ(next_a.generator_loss, next_b.generator_loss);
  expect_same_params(t.generator().params(), loaded->generator().params());
}

TEST_F(CheckpointTest, RejectsCorruptFiles) {
  std::ofstream(path_, std::ios::binary) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint<double>(path_.string()), Error);
  EXPECT_THROW(load_checkpoint<double>((path_.string() + ".missing")), Error);
}

TEST(TrainConfigJson, RoundTripAndUnknownKeys) {
  TrainConfig c = micro_train_config();
  c.loss.depth = 50.0;
  c.discriminator_steps = 3;
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  EXPECT_EQ(back.loss.depth, 50.0);
  EXPECT_EQ(back.discriminator_steps, 3);
  EXPECT_EQ(back.generator.stage_widths, c.generator.stage_widths);
  EXPECT_EQ(train_config_from_json("{}").generator_adam.lr, 1e-4);
  EXPECT_THROW(train_config_from_json(R"({"learning_rate": 1})"), Error);
  EXPECT_THROW(train_config_from_json("{"), Error);
}

}  // namespace
}  // namespace gforge::nn
