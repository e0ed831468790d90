#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sanmt/data.hpp"
#include "sanmt/losses.hpp"
#include "sanmt/model.hpp"

namespace sanmt {

// Zeiler's recommended constants.
inline constexpr double kAdadeltaRho = 0.95;
inline constexpr double kAdadeltaEpsilon = 1e-6;

struct OptimizerState {
  ModelParams mean_sq_grad;
  ModelParams mean_sq_update;
  double rho = kAdadeltaRho;
  double epsilon = kAdadeltaEpsilon;
  std::size_t updates = 0;

  static OptimizerState fresh(const ModelConfig& config);
  bool operator==(const OptimizerState&) const = default;
};

// Throws NumericError naming the first tensor holding a non-finite gradient.
void check_gradients_finite(const ModelParams& grads);

void adadelta_step(ModelParams& params, const ModelParams& grads, OptimizerState& state);
void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate);

double global_norm(const ModelParams& grads);
// Rescales so the global L2 norm is at most `threshold`; returns the norm
// before clipping.
double clip_gradients(ModelParams& grads, double threshold);

void zero(ModelParams& grads);

enum class OptimizerKind { Adadelta, Sgd };

struct TrainConfig {
  LossConfig loss;
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t max_updates = 1000;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 1;
  bool clip = true;
  double clip_threshold = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adadelta;
  double sgd_learning_rate = 0.1;

  void validate() const;
};

struct TrainData {
  std::span<const SentencePair> train;
  const std::vector<Matrix>* supervision = nullptr;  // one per train pair when supervised
  std::span<const SentencePair> dev;
  std::span<const std::string> dev_references;  // raw target lines for BLEU
  const Vocab* target_vocab = nullptr;
};

struct CurvePoint {
  std::size_t update = 0;
  double train_loss = 0.0;  // mean batch objective since the previous point
  double dev_bleu = 0.0;    // NaN without a dev set
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  ModelParams best;  // highest dev BLEU (last params without a dev set)
  std::size_t best_update = 0;
  double best_dev_bleu = 0.0;
  ModelParams last;
  OptimizerState optimizer;
};

using TrainObserver = std::function<void(const CurvePoint&)>;

// Gradient for one batch: sum over pairs of the joint objective, pair order
// fixed. Returns the batch objective.
double batch_gradient(const ModelParams& params, std::span<const SentencePair> pairs,
                      const std::vector<Matrix>* supervision, const LossConfig& loss,
                      ModelParams& grads);

// Runs until `optimizer.updates` reaches config.max_updates. Passing the
// state of an interrupted run continues it exactly where it stopped.
TrainResult train(const TrainData& data, const TrainConfig& config, ModelParams params,
                  std::optional<OptimizerState> optimizer = std::nullopt,
                  const TrainObserver& observer = {});

// Greedy-decodes `sources` and scores them against `references`.
double corpus_bleu(const ModelParams& params, std::span<const SentencePair> sources,
                   std::span<const std::string> references, const Vocab& target_vocab);

void write_learning_curve(const std::filesystem::path& path, std::span<const CurvePoint> curve);

void save_optimizer_state(const std::filesystem::path& path, const OptimizerState& state);
OptimizerState load_optimizer_state(const std::filesystem::path& path, const ModelConfig& config);

}  // namespace sanmt
