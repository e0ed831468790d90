#pragma once

#include <span>
#include <string>
#include <string_view>

#include "sanmt/data.hpp"
#include "sanmt/model.hpp"
#include "sanmt/numerics.hpp"
#include "sanmt/tape.hpp"

namespace sanmt {

enum class DeltaKind { None, Mse, Mul, Ce };

std::string_view to_string(DeltaKind kind);
DeltaKind parse_delta_kind(std::string_view text);  // none|mse|mul|ce, ConfigError otherwise

struct LossConfig {
  DeltaKind delta = DeltaKind::Ce;
  double lambda = 0.3;

  void validate() const;
  bool supervised() const { return delta != DeltaKind::None; }
};

// Negated sum of per-step gold log-probabilities. Throws NumericError on a
// positive entry.
double nll(std::span<const double> gold_log_probs);

// Disagreement between predicted attention and supervision, both
// (n+1)×(m+1). Shape mismatch throws ShapeError.
double delta_mse(const Matrix& alpha, const Matrix& alpha_hat);  // Σ ½(α-α̂)²
double delta_mul(const Matrix& alpha, const Matrix& alpha_hat);  // -log Σ α·α̂, one global log
double delta_ce(const Matrix& alpha, const Matrix& alpha_hat);   // -Σ α̂·log α
double delta(DeltaKind kind, const Matrix& alpha, const Matrix& alpha_hat);

// Taped versions of the above; alpha_hat is a constant.
Var delta_mse(Var alpha, const Matrix& alpha_hat);
Var delta_mul(Var alpha, const Matrix& alpha_hat);
Var delta_ce(Var alpha, const Matrix& alpha_hat);
Var delta(DeltaKind kind, Var alpha, const Matrix& alpha_hat);

struct JointLoss {
  Var total;        // nll + λ·Δ
  double nll = 0.0;
  double delta = 0.0;  // 0 when unsupervised
  Matrix alpha;
};

// Records nll + λ·Δ for one pair on the tape of `params`. `alpha_hat` may be
// null only for DeltaKind::None (ConfigError otherwise).
JointLoss joint_loss(const BoundParams& params, const SentencePair& pair, const Matrix* alpha_hat,
                     const LossConfig& config);

}  // namespace sanmt
