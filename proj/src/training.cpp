#include "sanmt/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sanmt/checkpoint.hpp"
#include "sanmt/decoding.hpp"
#include "sanmt/errors.hpp"
#include "sanmt/eval.hpp"
#include "sanmt/tape.hpp"

namespace sanmt {

OptimizerState OptimizerState::fresh(const ModelConfig& config) {
  OptimizerState s;
  s.mean_sq_grad = ModelParams::zeros(config);
  s.mean_sq_update = ModelParams::zeros(config);
  return s;
}

void check_gradients_finite(const ModelParams& grads) {
  for (const NamedTensor& t : const_cast<ModelParams&>(grads).tensors()) {
    if (!all_finite(*t.value)) throw NumericError("non-finite gradient in tensor " + t.name);
  }
}

void adadelta_step(ModelParams& params, const ModelParams& grads, OptimizerState& state) {
  check_gradients_finite(grads);
  auto p = params.tensors();
  auto g = const_cast<ModelParams&>(grads).tensors();
  auto acc_g = state.mean_sq_grad.tensors();
  auto acc_u = state.mean_sq_update.tensors();
  const double rho = state.rho, eps = state.epsilon;
  for (std::size_t k = 0; k < p.size(); ++k) {
    Matrix& x = *p[k].value;
    const Matrix& grad = *g[k].value;
    Matrix& eg = *acc_g[k].value;
    Matrix& eu = *acc_u[k].value;
    if (!x.same_shape(grad) || !x.same_shape(eg) || !x.same_shape(eu)) {
      throw ShapeError("adadelta_step: shape mismatch in tensor " + p[k].name);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg[i] = rho * eg[i] + (1.0 - rho) * grad[i] * grad[i];
      const double update = -std::sqrt(eu[i] + eps) / std::sqrt(eg[i] + eps) * grad[i];
      eu[i] = rho * eu[i] + (1.0 - rho) * update * update;
      x[i] += update;
    }
  }
  ++state.updates;
}

void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  check_gradients_finite(grads);
  auto p = params.tensors();
  auto g = const_cast<ModelParams&>(grads).tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    Matrix& x = *p[k].value;
    const Matrix& grad = *g[k].value;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= learning_rate * grad[i];
  }
}

double global_norm(const ModelParams& grads) {
  double total = 0.0;
  for (const NamedTensor& t : const_cast<ModelParams&>(grads).tensors()) total += squared_norm(*t.value);
  return std::sqrt(total);
}

double clip_gradients(ModelParams& grads, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("clip threshold must be positive");
  const double norm = global_norm(grads);
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (NamedTensor& t : grads.tensors())
      for (double& x : t.value->values()) x *= factor;
  }
  return norm;
}

void zero(ModelParams& grads) {
  for (NamedTensor& t : grads.tensors()) t.value->fill(0.0);
}

void TrainConfig::validate() const {
  loss.validate();
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_updates < 1) throw ConfigError("max updates must be at least 1");
  if (eval_interval < 1) throw ConfigError("eval interval must be at least 1");
  if (clip && !(clip_threshold > 0.0)) throw ConfigError("clip threshold must be positive");
}

double batch_gradient(const ModelParams& params, std::span<const SentencePair> pairs,
                      const std::vector<Matrix>* supervision, const LossConfig& loss,
                      ModelParams& grads) {
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    Tape tape;
    const BoundParams bound(tape, params, &grads);
    const Matrix* alpha_hat = supervision != nullptr ? &(*supervision)[k] : nullptr;
    const JointLoss objective = joint_loss(bound, pairs[k], loss.supervised() ? alpha_hat : nullptr, loss);
    tape.backward(objective.total);
    total += objective.total.scalar();
  }
  if (!std::isfinite(total)) throw NumericError("training objective became non-finite");
  return total;
}

double corpus_bleu(const ModelParams& params, std::span<const SentencePair> sources,
                   std::span<const std::string> references, const Vocab& target_vocab) {
  std::vector<std::string> hyps;
  hyps.reserve(sources.size());
  for (const SentencePair& pair : sources) {
    hyps.push_back(decode(greedy_decode(params, pair.source).tokens, target_vocab));
  }
  return bleu4(hyps, references);
}

TrainResult train(const TrainData& data, const TrainConfig& config, ModelParams params,
                  std::optional<OptimizerState> optimizer, const TrainObserver& observer) {
  config.validate();
  params.check_manifest();
  if (data.train.empty()) throw DomainError("train: empty training corpus");
  if (config.loss.supervised()) {
    if (data.supervision == nullptr) {
      throw ConfigError("train: supervised delta kind without alignment supervision");
    }
    if (data.supervision->size() != data.train.size()) {
      throw ConsistencyError("train: " + std::to_string(data.supervision->size()) +
                             " supervision matrices for " + std::to_string(data.train.size()) + " pairs");
    }
  }
  const bool has_dev = !data.dev.empty();
  if (has_dev && (data.target_vocab == nullptr || data.dev_references.size() != data.dev.size())) {
    throw ConsistencyError("train: dev set needs one reference line per pair and a target vocabulary");
  }

  OptimizerState state = optimizer ? std::move(*optimizer) : OptimizerState::fresh(params.config);
  ModelParams grads = ModelParams::zeros(params.config);
  const std::vector<Matrix>* supervision = config.loss.supervised() ? data.supervision : nullptr;

  TrainResult result;
  result.best_dev_bleu = -std::numeric_limits<double>::infinity();
  const std::size_t per_epoch = (data.train.size() + config.batch_size - 1) / config.batch_size;
  std::size_t epoch = state.updates / per_epoch;
  std::size_t skip = state.updates % per_epoch;
  double interval_loss = 0.0;
  std::size_t interval_updates = 0;

  while (state.updates < config.max_updates) {
    const auto batches =
        make_batches(data.train, supervision, config.batch_size, config.seed + 1000003ULL * epoch);
    for (std::size_t b = skip; b < batches.size() && state.updates < config.max_updates; ++b) {
      const Batch& batch = batches[b];
      zero(grads);
      const double loss = batch_gradient(params, batch.pairs,
                                         batch.supervision ? &*batch.supervision : nullptr,
                                         config.loss, grads);
      if (config.clip) clip_gradients(grads, config.clip_threshold);
      if (config.optimizer == OptimizerKind::Adadelta) {
        adadelta_step(params, grads, state);
      } else {
        sgd_step(params, grads, config.sgd_learning_rate);
        ++state.updates;
      }
      interval_loss += loss;
      ++interval_updates;

      if (state.updates % config.eval_interval == 0 || state.updates == config.max_updates) {
        CurvePoint point;
        point.update = state.updates;
        point.train_loss = interval_loss / static_cast<double>(interval_updates);
        point.dev_bleu = has_dev ? corpus_bleu(params, data.dev, data.dev_references, *data.target_vocab)
                                 : std::numeric_limits<double>::quiet_NaN();
        interval_loss = 0.0;
        interval_updates = 0;
        if (!has_dev || point.dev_bleu > result.best_dev_bleu) {
          result.best = params;
          result.best_update = point.update;
          result.best_dev_bleu = point.dev_bleu;
        }
        result.curve.push_back(point);
        if (observer) observer(point);
      }
    }
    skip = 0;
    ++epoch;
  }
  if (result.best.config.source_vocab == 0) {
    result.best = params;
    result.best_update = state.updates;
  }
  result.last = std::move(params);
  result.optimizer = std::move(state);
  return result;
}

void write_learning_curve(const std::filesystem::path& path, std::span<const CurvePoint> curve) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "update,train_loss,dev_bleu\n";
  for (const CurvePoint& p : curve) {
    out << p.update << ',' << format_double(p.train_loss) << ',' << format_double(p.dev_bleu) << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

void save_optimizer_state(const std::filesystem::path& path, const OptimizerState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "sanmt-optimizer " << kCheckpointVersion << '\n';
  out << "adadelta " << format_double(state.rho) << ' ' << format_double(state.epsilon) << ' '
      << state.updates << '\n';
  for (const NamedTensor& t : const_cast<ModelParams&>(state.mean_sq_grad).tensors()) {
    write_tensor(out, "sq_grad." + t.name, *t.value);
  }
  for (const NamedTensor& t : const_cast<ModelParams&>(state.mean_sq_update).tensors()) {
    write_tensor(out, "sq_update." + t.name, *t.value);
  }
  out << "end\n";
  if (!out) throw IoError("write failure on " + path.string());
}

OptimizerState load_optimizer_state(const std::filesystem::path& path, const ModelConfig& config) {
  LineReader in(path);
  const auto header = in.next_fields();
  if (header.size() != 2 || header[0] != "sanmt-optimizer" ||
      header[1] != std::to_string(kCheckpointVersion)) {
    in.fail("not a sanmt optimizer state (version " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto hyper = in.next_fields();
  if (hyper.size() != 4 || hyper[0] != "adadelta") in.fail("expected 'adadelta <rho> <eps> <updates>'");
  OptimizerState state = OptimizerState::fresh(config);
  try {
    state.rho = parse_double(hyper[1]);
    state.epsilon = parse_double(hyper[2]);
    state.updates = static_cast<std::size_t>(parse_double(hyper[3]));
  } catch (const ParseError& e) {
    in.fail(e.what());
  }
  const auto manifest = ModelParams::manifest(config);
  auto grads = state.mean_sq_grad.tensors();
  auto updates = state.mean_sq_update.tensors();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    *grads[i].value = in.read_tensor("sq_grad." + manifest[i].name);
    if (!grads[i].value->same_shape(Matrix(manifest[i].rows, manifest[i].cols))) {
      in.fail("shape mismatch for sq_grad." + manifest[i].name);
    }
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    *updates[i].value = in.read_tensor("sq_update." + manifest[i].name);
    if (!updates[i].value->same_shape(Matrix(manifest[i].rows, manifest[i].cols))) {
      in.fail("shape mismatch for sq_update." + manifest[i].name);
    }
  }
  if (in.next() != "end") in.fail("expected 'end'");
  return state;
}

}  // namespace sanmt
