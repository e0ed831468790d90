#include "sanmt/losses.hpp"

#include <cmath>

#include "sanmt/errors.hpp"

namespace sanmt {

std::string_view to_string(DeltaKind kind) {
  switch (kind) {
    case DeltaKind::None: return "none";
    case DeltaKind::Mse: return "mse";
    case DeltaKind::Mul: return "mul";
    case DeltaKind::Ce: return "ce";
  }
  return "none";
}

DeltaKind parse_delta_kind(std::string_view text) {
  if (text == "none") return DeltaKind::None;
  if (text == "mse") return DeltaKind::Mse;
  if (text == "mul") return DeltaKind::Mul;
  if (text == "ce") return DeltaKind::Ce;
  throw ConfigError("unknown delta kind '" + std::string(text) + "' (none, mse, mul, ce)");
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a finite non-negative number");
  }
}

double nll(std::span<const double> gold_log_probs) {
  double total = 0.0;
  for (double lp : gold_log_probs) {
    if (lp > 0.0) throw NumericError("nll: log-probability " + format_double(lp) + " is positive");
    total += lp;
  }
  return -total;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": alpha is " + a.shape_string() + ", supervision is " +
                     b.shape_string());
  }
}

}  // namespace

double delta_mse(const Matrix& alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha, alpha_hat, "delta_mse");
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double d = alpha[i] - alpha_hat[i];
    total += 0.5 * d * d;
  }
  return total;
}

double delta_mul(const Matrix& alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha, alpha_hat, "delta_mul");
  double mass = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) mass += alpha[i] * alpha_hat[i];
  return -clamped_log(mass);
}

double delta_ce(const Matrix& alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha, alpha_hat, "delta_ce");
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha_hat[i] != 0.0) total -= alpha_hat[i] * clamped_log(alpha[i]);
  }
  return total;
}

double delta(DeltaKind kind, const Matrix& alpha, const Matrix& alpha_hat) {
  switch (kind) {
    case DeltaKind::Mse: return delta_mse(alpha, alpha_hat);
    case DeltaKind::Mul: return delta_mul(alpha, alpha_hat);
    case DeltaKind::Ce: return delta_ce(alpha, alpha_hat);
    case DeltaKind::None: break;
  }
  return 0.0;
}

Var delta_mse(Var alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha.value(), alpha_hat, "delta_mse");
  const Var diff = subtract(alpha, alpha.tape->constant(alpha_hat));
  return scale(sum(hadamard(diff, diff)), 0.5);
}

Var delta_mul(Var alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha.value(), alpha_hat, "delta_mul");
  return scale(clamped_log(sum(hadamard(alpha, alpha.tape->constant(alpha_hat)))), -1.0);
}

Var delta_ce(Var alpha, const Matrix& alpha_hat) {
  require_same_shape(alpha.value(), alpha_hat, "delta_ce");
  return scale(sum(hadamard(alpha.tape->constant(alpha_hat), clamped_log(alpha))), -1.0);
}

Var delta(DeltaKind kind, Var alpha, const Matrix& alpha_hat) {
  switch (kind) {
    case DeltaKind::Mse: return delta_mse(alpha, alpha_hat);
    case DeltaKind::Mul: return delta_mul(alpha, alpha_hat);
    case DeltaKind::Ce: return delta_ce(alpha, alpha_hat);
    case DeltaKind::None: break;
  }
  throw ConfigError("delta: no disagreement loss for kind 'none'");
}

JointLoss joint_loss(const BoundParams& params, const SentencePair& pair, const Matrix* alpha_hat,
                     const LossConfig& config) {
  config.validate();
  if (config.supervised() && alpha_hat == nullptr) {
    throw ConfigError("delta kind '" + std::string(to_string(config.delta)) +
                      "' needs alignment supervision");
  }
  const TeacherForced forward = forward_teacher_forced(params, pair);
  JointLoss out;
  out.alpha = forward.alpha.value();

  // Left-to-right accumulation keeps the reduction order fixed.
  Var log_likelihood = forward.gold_log_probs.front();
  for (std::size_t t = 1; t < forward.gold_log_probs.size(); ++t) {
    log_likelihood = add(log_likelihood, forward.gold_log_probs[t]);
  }
  Var total = scale(log_likelihood, -1.0);
  out.nll = total.scalar();
  if (config.supervised()) {
    const Var disagreement = delta(config.delta, forward.alpha, *alpha_hat);
    out.delta = disagreement.scalar();
    total = add(total, scale(disagreement, config.lambda));
  }
  out.total = total;
  return out;
}

}  // namespace sanmt
