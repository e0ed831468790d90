#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "sanmt/align_supervision.hpp"
#include "sanmt/checkpoint.hpp"
#include "sanmt/errors.hpp"
#include "sanmt/grad_check.hpp"
#include "sanmt/harness.hpp"
#include "sanmt/training.hpp"
#include "test_util.hpp"

namespace sanmt {
namespace {

using testing::tiny_config;

ModelParams filled(const ModelConfig& c, double value) {
  ModelParams p = ModelParams::zeros(c);
  for (const NamedTensor& t : p.tensors()) t.value->fill(value);
  return p;
}

TEST(Adadelta, ZeroGradientLeavesParamsAndDecaysAccumulators) {
  const ModelConfig c = tiny_config();
  ModelParams params = ModelParams::initialized(c, 1);
  const ModelParams before = params;
  OptimizerState state = OptimizerState::fresh(c);
  state.mean_sq_grad = filled(c, 1.0);
  state.mean_sq_update = filled(c, 2.0);
  adadelta_step(params, ModelParams::zeros(c), state);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.mean_sq_grad, filled(c, kAdadeltaRho));
  EXPECT_EQ(state.mean_sq_update, filled(c, 2.0 * kAdadeltaRho));
  EXPECT_EQ(state.updates, 1u);
}

TEST(Adadelta, FirstStepClosedForm) {
  const ModelConfig c = tiny_config();
  ModelParams params = ModelParams::zeros(c);
  ModelParams grads = ModelParams::initialized(c, 2, 3.0);
  OptimizerState state = OptimizerState::fresh(c);
  adadelta_step(params, grads, state);
  const auto gt = grads.tensors();
  const auto pt = params.tensors();
  const double eps = kAdadeltaEpsilon, rho = kAdadeltaRho;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t k = 0; k < gt[i].value->size(); ++k) {
      const double g = (*gt[i].value)[k];
      const double expected = -std::sqrt(eps) / std::sqrt((1 - rho) * g * g + eps) * g;
      EXPECT_NEAR((*pt[i].value)[k], expected, 1e-15) << gt[i].name;
    }
  }
}

TEST(Adadelta, ConstantGradientStepSizeSettles) {
  const ModelConfig c = tiny_config(3, 1, 1, 1);
  ModelParams params = ModelParams::zeros(c);
  const ModelParams grads = filled(c, 0.5);
  OptimizerState state = OptimizerState::fresh(c);
  std::vector<double> steps;
  for (int i = 0; i < 4000; ++i) {
    const double before = params.output_bias[0];
    adadelta_step(params, grads, state);
    steps.push_back(before - params.output_bias[0]);
  }
  // Step sizes grow monotonically while the update accumulator warms up and
  // flatten out once the two running averages balance.
  for (std::size_t i = 1; i < steps.size(); ++i) EXPECT_GE(steps[i], steps[i - 1] - 1e-15);
  const double late_change = steps.back() - steps[steps.size() - 100];
  const double early_change = steps[100] - steps[0];
  EXPECT_LT(late_change, early_change * 0.01 + 1e-3);
  EXPECT_GT(steps.back(), 0.0);
}

TEST(Adadelta, NonFiniteGradientNamesTensor) {
  const ModelConfig c = tiny_config();
  ModelParams params = ModelParams::zeros(c);
  ModelParams grads = ModelParams::zeros(c);
  grads.attention_bias(0, 2) = std::numeric_limits<double>::quiet_NaN();
  OptimizerState state = OptimizerState::fresh(c);
  try {
    adadelta_step(params, grads, state);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("attention.bias"), std::string::npos) << e.what();
  }
  EXPECT_EQ(params, ModelParams::zeros(c));
}

TEST(Clip, Examples) {
  const ModelConfig c = tiny_config(3, 1, 1, 1);
  ModelParams g = ModelParams::zeros(c);
  g.output_bias(0, 0) = 0.3;
  g.output_bias(0, 1) = 0.4;
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 0.5);
  EXPECT_EQ(g.output_bias(0, 0), 0.3);

  g.output_bias(0, 0) = 6.0;
  g.output_bias(0, 1) = 8.0;
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 10.0);
  EXPECT_NEAR(g.output_bias(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-15);

  ModelParams z = ModelParams::zeros(c);
  EXPECT_EQ(clip_gradients(z, 1.0), 0.0);
  EXPECT_EQ(z, ModelParams::zeros(c));
}

TEST(Sgd, StepsAgainstGradient) {
  const ModelConfig c = tiny_config(3, 1, 1, 1);
  ModelParams p = ModelParams::zeros(c);
  sgd_step(p, filled(c, 2.0), 0.1);
  EXPECT_NEAR(p.output_bias(0, 0), -0.2, 1e-15);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_updates = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.clip_threshold = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.clip = false;
  EXPECT_NO_THROW(c.validate());
}

// Small reversal corpus shared by the training tests.
class TrainFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthSpec spec;
    spec.vocab_size = 6;
    spec.min_len = 2;
    spec.max_len = 4;
    spec.train_size = 60;
    spec.dev_size = 10;
    spec.test_size = 1;
    corpus = generate(spec);
    src_vocab = build_vocab(corpus.train.source, 100);
    tgt_vocab = build_vocab(corpus.train.target, 100);
    train = encode_parallel({corpus.train.source, corpus.train.target}, src_vocab, tgt_vocab);
    dev = encode_parallel({corpus.dev.source, corpus.dev.target}, src_vocab, tgt_vocab);
    for (std::size_t i = 0; i < train.size(); ++i) {
      supervision.push_back(to_supervision(parse_pharaoh(corpus.train.alignment[i], train[i].m(), train[i].n())));
    }
    config.source_vocab = src_vocab.size();
    config.target_vocab = tgt_vocab.size();
    config.embedding_dim = 6;
    config.hidden_dim = 8;
    config.attention_dim = 8;
  }

  TrainData data() const {
    TrainData d;
    d.train = train;
    d.supervision = &supervision;
    d.dev = dev;
    d.dev_references = corpus.dev.target;
    d.target_vocab = &tgt_vocab;
    return d;
  }

  TrainConfig train_config(DeltaKind kind, double lambda, std::size_t updates = 12) const {
    TrainConfig t;
    t.loss = {kind, lambda};
    t.batch_size = 8;
    t.max_updates = updates;
    t.eval_interval = 4;
    t.seed = 3;
    return t;
  }

  SynthCorpus corpus;
  Vocab src_vocab, tgt_vocab;
  std::vector<SentencePair> train, dev;
  std::vector<Matrix> supervision;
  ModelConfig config;
};

bool curves_identical(const std::vector<CurvePoint>& a, const std::vector<CurvePoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].update != b[i].update) return false;
    if (std::memcmp(&a[i].train_loss, &b[i].train_loss, sizeof(double)) != 0) return false;
    if (std::memcmp(&a[i].dev_bleu, &b[i].dev_bleu, sizeof(double)) != 0) return false;
  }
  return true;
}

TEST_F(TrainFixture, RepeatedRunsAreIdentical) {
  const ModelParams init = ModelParams::initialized(config, 1);
  const TrainResult a = sanmt::train(data(), train_config(DeltaKind::Ce, 0.3), init);
  const TrainResult b = sanmt::train(data(), train_config(DeltaKind::Ce, 0.3), init);
  EXPECT_TRUE(curves_identical(a.curve, b.curve));
  EXPECT_EQ(a.last, b.last);
  EXPECT_EQ(a.optimizer, b.optimizer);
  ASSERT_EQ(a.curve.size(), 3u);
  EXPECT_EQ(a.curve.back().update, 12u);
}

TEST_F(TrainFixture, ZeroLambdaMatchesUnsupervised) {
  const ModelParams init = ModelParams::initialized(config, 1);
  const TrainResult none = sanmt::train(data(), train_config(DeltaKind::None, 0.0), init);
  for (DeltaKind k : {DeltaKind::Mse, DeltaKind::Mul, DeltaKind::Ce}) {
    const TrainResult zero = sanmt::train(data(), train_config(k, 0.0), init);
    EXPECT_TRUE(curves_identical(none.curve, zero.curve)) << to_string(k);
    EXPECT_EQ(none.last, zero.last) << to_string(k);
  }
}

TEST_F(TrainFixture, SupervisionChangesTrajectory) {
  const ModelParams init = ModelParams::initialized(config, 1);
  const TrainResult none = sanmt::train(data(), train_config(DeltaKind::None, 0.0), init);
  const TrainResult ce = sanmt::train(data(), train_config(DeltaKind::Ce, 1.0), init);
  EXPECT_FALSE(none.last == ce.last);
}

TEST_F(TrainFixture, ResumeContinuesExactly) {
  const ModelParams init = ModelParams::initialized(config, 1);
  // 60 pairs / batch 8 = 8 batches per epoch; stopping at 12 crosses an epoch.
  const TrainResult full = sanmt::train(data(), train_config(DeltaKind::Ce, 0.3, 20), init);
  const TrainResult first = sanmt::train(data(), train_config(DeltaKind::Ce, 0.3, 12), init);
  const TrainResult second = sanmt::train(data(), train_config(DeltaKind::Ce, 0.3, 20), first.last, first.optimizer);
  EXPECT_EQ(second.last, full.last);
  EXPECT_EQ(second.optimizer, full.optimizer);
  ASSERT_EQ(second.curve.size(), 2u);
  EXPECT_TRUE(curves_identical(second.curve, {full.curve.end() - 2, full.curve.end()}));
}

TEST_F(TrainFixture, ResumeThroughFilesContinuesExactly) {
  testing::TempDir dir("resume");
  const ModelParams init = ModelParams::initialized(config, 1);
  const TrainResult full = sanmt::train(data(), train_config(DeltaKind::Mse, 0.5, 10), init);
  const TrainResult first = sanmt::train(data(), train_config(DeltaKind::Mse, 0.5, 5), init);
  save_checkpoint(dir / "last", {first.last, src_vocab, tgt_vocab});
  save_optimizer_state(dir / "opt", first.optimizer);
  const Checkpoint loaded = load_checkpoint(dir / "last");
  const TrainResult second = sanmt::train(data(), train_config(DeltaKind::Mse, 0.5, 10), loaded.params,
                                          load_optimizer_state(dir / "opt", config));
  EXPECT_EQ(second.last, full.last);
}

TEST_F(TrainFixture, MissingSupervisionRejected) {
  TrainData d = data();
  d.supervision = nullptr;
  EXPECT_THROW(sanmt::train(d, train_config(DeltaKind::Ce, 0.3), ModelParams::initialized(config, 1)), ConfigError);
  std::vector<Matrix> short_sup(supervision.begin(), supervision.end() - 1);
  d.supervision = &short_sup;
  EXPECT_THROW(sanmt::train(d, train_config(DeltaKind::Ce, 0.3), ModelParams::initialized(config, 1)),
               ConsistencyError);
}

TEST_F(TrainFixture, BestCheckpointHasHighestDevBleu) {
  const TrainResult r = sanmt::train(data(), train_config(DeltaKind::Ce, 1.0, 40), ModelParams::initialized(config, 2));
  double best = -1;
  std::size_t best_update = 0;
  for (const CurvePoint& p : r.curve) {
    if (p.dev_bleu > best) {
      best = p.dev_bleu;
      best_update = p.update;
    }
  }
  EXPECT_EQ(r.best_update, best_update);
  EXPECT_EQ(r.best_dev_bleu, best);
  EXPECT_EQ(corpus_bleu(r.best, dev, corpus.dev.target, tgt_vocab), best);
}

TEST_F(TrainFixture, WithoutDevBestIsLast) {
  TrainData d = data();
  d.dev = {};
  d.dev_references = {};
  const TrainResult r = sanmt::train(d, train_config(DeltaKind::None, 0.0), ModelParams::initialized(config, 2));
  EXPECT_EQ(r.best, r.last);
  EXPECT_TRUE(std::isnan(r.curve.front().dev_bleu));
}

TEST_F(TrainFixture, BatchGradientMatchesFiniteDifferences) {
  ModelParams params = ModelParams::initialized(config, 4, 0.5);
  ModelParams grads = ModelParams::zeros(config);
  const std::span<const SentencePair> pairs(train.data(), 3);
  const std::vector<Matrix> sup(supervision.begin(), supervision.begin() + 3);
  const LossConfig loss{DeltaKind::Ce, 0.7};
  batch_gradient(params, pairs, &sup, loss, grads);
  std::vector<CheckedTensor> checked;
  auto pt = params.tensors();
  auto gt = grads.tensors();
  for (std::size_t i = 0; i < pt.size(); ++i) checked.push_back({pt[i].name, pt[i].value, gt[i].value});
  GradCheckOptions o;
  o.max_samples_per_tensor = 20;
  o.epsilon = 1e-5;
  const auto report = grad_check(checked, [&] {
    ModelParams scratch = ModelParams::zeros(config);
    return batch_gradient(params, pairs, &sup, loss, scratch);
  }, o);
  EXPECT_TRUE(report.passed()) << report.max_relative_error;
}

TEST_F(TrainFixture, LearningCurveCsv) {
  testing::TempDir dir("curve");
  const TrainResult r = sanmt::train(data(), train_config(DeltaKind::None, 0.0, 8), ModelParams::initialized(config, 1));
  write_learning_curve(dir / "c.csv", r.curve);
  const auto lines = read_lines(dir / "c.csv");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "update,train_loss,dev_bleu");
  EXPECT_EQ(lines[1].substr(0, 2), "4,");
}

// Whole-corpus objective on fixed data, so batch composition cannot mask the trend.
TEST(TrainLoss, DecreasesOverFirstHundredUpdatesOnReversal) {
  std::size_t decreasing = 0;
  const std::size_t seeds = 20;
  for (std::size_t seed = 1; seed <= seeds; ++seed) {
    SynthSpec spec;
    spec.train_size = 400;
    spec.dev_size = 1;
    spec.test_size = 1;
    spec.seed = seed;
    const SynthCorpus corpus = generate(spec);
    const Vocab sv = build_vocab(corpus.train.source, 100), tv = build_vocab(corpus.train.target, 100);
    const auto pairs = encode_parallel({corpus.train.source, corpus.train.target}, sv, tv);
    ModelConfig mc = tiny_config(sv.size(), 16, 16, 16);
    mc.target_vocab = tv.size();
    TrainConfig tc;
    tc.loss = {DeltaKind::None, 0.0};
    tc.batch_size = 8;
    tc.max_updates = 100;
    tc.eval_interval = 100;
    tc.seed = seed;
    TrainData d;
    d.train = pairs;
    const auto corpus_loss = [&](const ModelParams& p) {
      ModelParams scratch = ModelParams::zeros(mc);
      return batch_gradient(p, pairs, nullptr, tc.loss, scratch);
    };
    const ModelParams init = ModelParams::initialized(mc, seed);
    const TrainResult r = sanmt::train(d, tc, init);
    decreasing += corpus_loss(r.last) < corpus_loss(init);
  }
  EXPECT_GE(decreasing, 19u) << decreasing << " of " << seeds;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testing::TempDir dir("ckpt");
  const ModelConfig c = tiny_config(7, 3, 4, 5);
  Checkpoint ck{ModelParams::initialized(c, 9, 1.0), Vocab::from_tokens({"<eol>", "<unk>", "a", "b", "c", "d", "e"}),
                Vocab::from_tokens({"<eol>", "<unk>", "v", "w", "x", "y", "z"})};
  ck.params.output_bias(0, 0) = 1e-300;
  ck.params.output_bias(0, 1) = -0.1;
  save_checkpoint(dir / "m", ck);
  const Checkpoint back = load_checkpoint(dir / "m");
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.source_vocab, ck.source_vocab);
  EXPECT_EQ(back.target_vocab, ck.target_vocab);
}

class CheckpointCorruption : public ::testing::Test {
 protected:
  void SetUp() override {
    const ModelConfig c = tiny_config(4, 2, 2, 2);
    save_checkpoint(dir / "m", {ModelParams::initialized(c, 1), Vocab::from_tokens({"<eol>", "<unk>", "a", "b"}),
                                Vocab::from_tokens({"<eol>", "<unk>", "x", "y"})});
    lines = read_lines(dir / "m");
  }
  void expect_load_error(const std::vector<std::string>& edited) {
    write_lines(dir / "bad", edited);
    EXPECT_THROW(load_checkpoint(dir / "bad"), LoadError);
  }
  testing::TempDir dir{"corrupt"};
  std::vector<std::string> lines;
};

TEST_F(CheckpointCorruption, WrongVersion) {
  auto e = lines;
  e[0] = "sanmt-checkpoint 2";
  expect_load_error(e);
}

TEST_F(CheckpointCorruption, ConfigDisagreesWithTensorShapes) {
  auto e = lines;
  e[1] = "config 4 4 3 2 2";
  expect_load_error(e);
}

TEST_F(CheckpointCorruption, Truncated) {
  expect_load_error({lines.begin(), lines.end() - 2});
}

TEST_F(CheckpointCorruption, BadNumber) {
  auto e = lines;
  for (auto& l : e) {
    if (l.rfind("tensor ", 0) == 0) {
      auto& next = *(&l + 1);
      next = "nan? " + next;
      break;
    }
  }
  expect_load_error(e);
}

TEST_F(CheckpointCorruption, MissingFile) { EXPECT_THROW(load_checkpoint(dir / "none"), DataError); }

TEST(OptimizerStateFile, RoundTrip) {
  testing::TempDir dir("opt");
  const ModelConfig c = tiny_config(4, 2, 3, 2);
  OptimizerState s = OptimizerState::fresh(c);
  s.mean_sq_grad = ModelParams::initialized(c, 1, 2.0);
  s.mean_sq_update = ModelParams::initialized(c, 2, 2.0);
  s.updates = 77;
  save_optimizer_state(dir / "o", s);
  EXPECT_EQ(load_optimizer_state(dir / "o", c), s);
  EXPECT_THROW(load_optimizer_state(dir / "o", tiny_config(4, 2, 4, 2)), LoadError);
}

}  // namespace
}  // namespace sanmt
