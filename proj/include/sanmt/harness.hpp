#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sanmt/decoding.hpp"
#include "sanmt/model.hpp"
#include "sanmt/training.hpp"

namespace sanmt {

enum class SynthTask { Copy, Reverse, LocalSwap };

std::string_view to_string(SynthTask task);
SynthTask parse_synth_task(std::string_view text);  // copy|reverse|local-swap

struct SynthSpec {
  SynthTask task = SynthTask::Reverse;
  std::size_t vocab_size = 20;
  std::size_t min_len = 3;
  std::size_t max_len = 8;
  std::size_t train_size = 3000;
  std::size_t dev_size = 200;
  std::size_t test_size = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

// Target position of every source position under the task's reordering.
std::vector<std::size_t> task_permutation(SynthTask task, std::size_t length);

struct SynthSplit {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::vector<std::string> alignment;  // Pharaoh, source-target
};

struct SynthCorpus {
  SynthSplit train;
  SynthSplit dev;
  SynthSplit test;
};

// Source words are t<k>, uniformly drawn; the target reorders them and renames
// t<k> to u<k>.
SynthCorpus generate(const SynthSpec& spec);

// Writes {train,dev,test}.{src,tgt,align} into `dir`.
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

struct ExperimentConfig {
  std::string name;
  TrainConfig train;
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t attention_dim = 64;
  std::uint64_t init_seed = 1;
};

struct ExperimentOptions {
  std::size_t beam = kDefaultBeam;
  std::size_t heatmap_samples = 3;
  std::filesystem::path output_dir;  // empty: keep everything in memory
};

struct ExperimentRow {
  std::string config;
  std::string task;
  double dev_bleu = 0.0;
  double test_bleu = 0.0;
  double test_aer = 0.0;
  double token_acc = 0.0;  // teacher-forced argmax accuracy on test, eol included
  std::vector<CurvePoint> curve;
  std::vector<Matrix> heatmaps;  // force-decoded attention of the first test pairs
};

using ExperimentObserver = std::function<void(const std::string& config, const CurvePoint&)>;

// Trains every config on the same generated data and evaluates the best
// checkpoint on the test split. Needs at least one unsupervised and one
// supervised config.
std::vector<ExperimentRow> run_experiment(const SynthSpec& spec, std::span<const ExperimentConfig> configs,
                                          const ExperimentOptions& options = {},
                                          const ExperimentObserver& observer = {});

// CSV header: config,task,dev_bleu,test_bleu,test_aer,token_acc
void write_report(const std::filesystem::path& path, std::span<const ExperimentRow> rows);
// "rows cols" header, then one line per row.
void write_heatmap(const std::filesystem::path& path, const Matrix& alpha);

double teacher_forced_accuracy(const ModelParams& params, std::span<const SentencePair> pairs);

}  // namespace sanmt
