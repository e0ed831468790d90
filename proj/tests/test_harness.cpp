#include <gtest/gtest.h>

#include <set>

#include "sanmt/align_supervision.hpp"
#include "sanmt/errors.hpp"
#include "sanmt/harness.hpp"
#include "test_util.hpp"

namespace sanmt {
namespace {

SynthSpec small_spec(SynthTask task) {
  SynthSpec s;
  s.task = task;
  s.vocab_size = 8;
  s.min_len = 1;
  s.max_len = 7;
  s.train_size = 50;
  s.dev_size = 5;
  s.test_size = 5;
  return s;
}

TEST(TaskPermutation, Definitions) {
  EXPECT_EQ(task_permutation(SynthTask::Copy, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(task_permutation(SynthTask::Reverse, 3), (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(task_permutation(SynthTask::LocalSwap, 5), (std::vector<std::size_t>{1, 0, 3, 2, 4}));
}

TEST(Generate, CopyRenamesTokens) {
  const SynthCorpus c = generate(small_spec(SynthTask::Copy));
  for (std::size_t i = 0; i < c.train.source.size(); ++i) {
    const auto s = split_tokens(c.train.source[i]);
    const auto t = split_tokens(c.train.target[i]);
    ASSERT_EQ(s.size(), t.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_EQ(s[k][0], 't');
      EXPECT_EQ(t[k], "u" + s[k].substr(1));
    }
  }
}

TEST(Generate, ReverseAlignmentForThreeTokens) {
  SynthSpec spec = small_spec(SynthTask::Reverse);
  spec.min_len = spec.max_len = 3;
  const SynthCorpus c = generate(spec);
  for (const std::string& a : c.train.alignment) EXPECT_EQ(a, "0-2 1-1 2-0");
}

TEST(Generate, SameSeedSameCorpus) {
  const SynthCorpus a = generate(small_spec(SynthTask::LocalSwap));
  const SynthCorpus b = generate(small_spec(SynthTask::LocalSwap));
  EXPECT_EQ(a.train.source, b.train.source);
  EXPECT_EQ(a.test.alignment, b.test.alignment);
  SynthSpec other = small_spec(SynthTask::LocalSwap);
  other.seed = 2;
  EXPECT_NE(generate(other).train.source, a.train.source);
}

TEST(Generate, AlignmentsArePermutationsAndTargetsFollowThem) {
  for (SynthTask task : {SynthTask::Copy, SynthTask::Reverse, SynthTask::LocalSwap}) {
    const SynthCorpus c = generate(small_spec(task));
    for (std::size_t i = 0; i < c.train.source.size(); ++i) {
      const auto s = split_tokens(c.train.source[i]);
      const auto t = split_tokens(c.train.target[i]);
      ASSERT_GE(s.size(), 1u);
      ASSERT_LE(s.size(), 7u);
      const HardAlignment h = parse_pharaoh(c.train.alignment[i], s.size(), t.size());
      std::set<std::size_t> src, tgt;
      for (const Link& l : h.links) {
        src.insert(l.source);
        tgt.insert(l.target);
        EXPECT_EQ(t[l.target], "u" + s[l.source].substr(1));
      }
      EXPECT_EQ(h.links.size(), s.size());
      EXPECT_EQ(src.size(), s.size());
      EXPECT_EQ(tgt.size(), t.size());
      const Matrix sup = to_supervision(h);
      for (std::size_t r = 0; r < sup.rows(); ++r) {
        std::size_t ones = 0;
        for (double x : sup.row(r)) {
          EXPECT_TRUE(x == 0.0 || x == 1.0);
          ones += x == 1.0;
        }
        EXPECT_EQ(ones, 1u);
      }
    }
  }
}

TEST(SynthSpec, Validation) {
  SynthSpec s;
  EXPECT_NO_THROW(s.validate());
  s.max_len = 21;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.min_len = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.min_len = 5;
  s.max_len = 4;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.dev_size = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(parse_synth_task("rotate"), ConfigError);
  EXPECT_EQ(parse_synth_task("local-swap"), SynthTask::LocalSwap);
}

TEST(WriteCorpus, WritesNineFiles) {
  testing::TempDir dir("synth");
  write_corpus(dir.path(), generate(small_spec(SynthTask::Reverse)));
  for (const char* split : {"train", "dev", "test"})
    for (const char* ext : {"src", "tgt", "align"})
      EXPECT_TRUE(std::filesystem::exists(dir.path() / (std::string(split) + "." + ext)));
  EXPECT_EQ(read_lines(dir.path() / "train.src").size(), 50u);
}

ExperimentConfig config_for(const std::string& name, DeltaKind kind, double lambda) {
  ExperimentConfig c;
  c.name = name;
  c.train.loss = {kind, lambda};
  c.train.batch_size = 10;
  c.train.max_updates = 6;
  c.train.eval_interval = 3;
  c.embedding_dim = 6;
  c.hidden_dim = 8;
  c.attention_dim = 8;
  return c;
}

TEST(RunExperiment, OneRowPerConfigAndZeroLambdaMatchesBaseline) {
  testing::TempDir dir("exp");
  const std::vector<ExperimentConfig> configs{config_for("nmt", DeltaKind::None, 0.0),
                                              config_for("ce0", DeltaKind::Ce, 0.0),
                                              config_for("ce1", DeltaKind::Ce, 1.0)};
  ExperimentOptions options;
  options.beam = 2;
  options.output_dir = dir.path();
  const auto rows = run_experiment(small_spec(SynthTask::Reverse), configs, options);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].test_aer, rows[1].test_aer);
  EXPECT_EQ(rows[0].test_bleu, rows[1].test_bleu);
  EXPECT_EQ(rows[0].token_acc, rows[1].token_acc);
  ASSERT_EQ(rows[0].curve.size(), rows[1].curve.size());
  for (std::size_t i = 0; i < rows[0].curve.size(); ++i)
    EXPECT_EQ(rows[0].curve[i].train_loss, rows[1].curve[i].train_loss);
  EXPECT_EQ(rows[0].task, "reverse");

  const auto report = read_lines(dir.path() / "report.csv");
  ASSERT_EQ(report.size(), 4u);
  EXPECT_EQ(report[0], "config,task,dev_bleu,test_bleu,test_aer,token_acc");
  EXPECT_EQ(report[1].substr(0, 12), "nmt,reverse,");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "ce1_heatmap_0.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "nmt_curve.csv"));
}

TEST(RunExperiment, NeedsBothKindsOfConfig) {
  const std::vector<ExperimentConfig> only_nmt{config_for("nmt", DeltaKind::None, 0.0)};
  EXPECT_THROW(run_experiment(small_spec(SynthTask::Copy), only_nmt), ConfigError);
}

TEST(Heatmap, HeaderThenRows) {
  testing::TempDir dir("heat");
  write_heatmap(dir / "h", Matrix{{0.25, 0.75}, {0, 1}, {1, 0}});
  const auto lines = read_lines(dir / "h");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "3 2");
  EXPECT_EQ(lines[1], "0.25 0.75");
}

TEST(TeacherForcedAccuracy, InUnitInterval) {
  const ModelParams p = ModelParams::initialized(testing::tiny_config(), 1);
  std::mt19937_64 rng(1);
  std::vector<SentencePair> pairs;
  for (int i = 0; i < 5; ++i) pairs.push_back(testing::random_pair(rng, 10, 1, 4));
  const double acc = teacher_forced_accuracy(p, pairs);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

}  // namespace
}  // namespace sanmt
