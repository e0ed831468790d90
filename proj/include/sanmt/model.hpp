#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sanmt/data.hpp"
#include "sanmt/numerics.hpp"
#include "sanmt/tape.hpp"

namespace sanmt {

struct ModelConfig {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t embedding_dim = 620;
  std::size_t hidden_dim = 1000;
  std::size_t attention_dim = 1000;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// GRU with fused gate blocks laid out as [update | reset | candidate].
struct GruParams {
  Matrix input;      // in × 3H
  Matrix gates;      // H × 2H, recurrent weights for update and reset
  Matrix candidate;  // H × H, applied to (reset ∘ h)
  Matrix bias;       // 1 × 3H

  bool operator==(const GruParams&) const = default;
};

struct NamedTensor {
  std::string name;
  Matrix* value;
};

struct TensorShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool operator==(const TensorShape&) const = default;
};

// All trainable tensors. Row-vector convention: activations are 1×d and
// layers compute x·W + b.
struct ModelParams {
  ModelConfig config;
  Matrix source_embedding;  // Vs × E
  Matrix target_embedding;  // Vt × E
  GruParams encoder_forward;
  GruParams encoder_backward;
  Matrix init_weight;  // H × H, from the backward state at the first source position
  Matrix init_bias;    // 1 × H
  GruParams decoder;   // input is [emb(y_prev); c_t]
  Matrix attention_state;   // H × A
  Matrix attention_source;  // 2H × A
  Matrix attention_prev;    // E × A
  Matrix attention_bias;    // 1 × A
  Matrix attention_score;   // A × 1
  Matrix output_weight;     // (E + H + 2H) × Vt over [emb(y_prev); h_t; c_t]
  Matrix output_bias;       // 1 × Vt

  static ModelParams zeros(const ModelConfig& config);
  // Every entry uniform in [-scale, scale].
  static ModelParams initialized(const ModelConfig& config, std::uint64_t seed, double scale = 0.08);

  static std::vector<TensorShape> manifest(const ModelConfig& config);
  std::vector<NamedTensor> tensors();
  std::vector<TensorShape> shapes() const;
  // Throws LoadError naming the first tensor that disagrees with the manifest.
  void check_manifest() const;

  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const = default;
};

// Parameter leaves of one tape. With `grads` set, backward() accumulates into it.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ModelParams& params, ModelParams* grads = nullptr);

  struct Gru {
    Var input, gates, candidate, bias;
  };

  Tape& tape;
  const ModelConfig& config;
  Var source_embedding, target_embedding;
  Gru encoder_forward, encoder_backward, decoder;
  Var init_weight, init_bias;
  Var attention_state, attention_source, attention_prev, attention_bias, attention_score;
  Var output_weight, output_bias;
};

struct EncoderStates {
  Var states;          // (m+1) × 2H, row i = [forward_i; backward_i]
  Var attention_keys;  // (m+1) × A, states · attention_source
  Var backward_first;  // 1 × H
  std::size_t length() const { return states.rows(); }
};

struct DecoderState {
  Var h;      // 1 × H
  Var c;      // 1 × 2H
  Var alpha;  // 1 × (m+1)
};

struct StepOutput {
  DecoderState state;
  Var log_probs;  // 1 × Vt
  std::vector<double> distribution() const;
};

Var gru_step(const BoundParams::Gru& gru, Var projected_input, Var h_prev, std::size_t hidden);

EncoderStates encode(const BoundParams& params, std::span<const Token> source);
Var initial_state(const BoundParams& params, const EncoderStates& enc);
Var attend(const BoundParams& params, Token y_prev, Var h_prev, const EncoderStates& enc);
StepOutput decoder_step(const BoundParams& params, Token y_prev, Var h_prev, const EncoderStates& enc);

struct TeacherForced {
  std::vector<Var> gold_log_probs;  // n+1 scalars, last one for eol
  Var alpha;                        // (n+1) × (m+1)
};

// y_0 = eol; step t consumes the gold y_{t-1}.
TeacherForced forward_teacher_forced(const BoundParams& params, const SentencePair& pair);

}  // namespace sanmt
