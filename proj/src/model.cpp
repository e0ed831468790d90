#include "sanmt/model.hpp"

#include <cmath>
#include <random>

#include "sanmt/errors.hpp"

namespace sanmt {

void ModelConfig::validate() const {
  if (source_vocab < 1 || target_vocab < 1 || embedding_dim < 1 || hidden_dim < 1 ||
      attention_dim < 1) {
    throw ConfigError("model dimensions and vocabulary sizes must all be >= 1");
  }
}

namespace {

void gru_manifest(std::vector<TensorShape>& out, const std::string& prefix, std::size_t in,
                  std::size_t h) {
  out.push_back({prefix + ".input", in, 3 * h});
  out.push_back({prefix + ".gates", h, 2 * h});
  out.push_back({prefix + ".candidate", h, h});
  out.push_back({prefix + ".bias", 1, 3 * h});
}

void gru_tensors(std::vector<NamedTensor>& out, const std::string& prefix, GruParams& g) {
  out.push_back({prefix + ".input", &g.input});
  out.push_back({prefix + ".gates", &g.gates});
  out.push_back({prefix + ".candidate", &g.candidate});
  out.push_back({prefix + ".bias", &g.bias});
}

}  // namespace

std::vector<TensorShape> ModelParams::manifest(const ModelConfig& c) {
  const std::size_t e = c.embedding_dim, h = c.hidden_dim, a = c.attention_dim;
  std::vector<TensorShape> out;
  out.push_back({"source_embedding", c.source_vocab, e});
  out.push_back({"target_embedding", c.target_vocab, e});
  gru_manifest(out, "encoder_forward", e, h);
  gru_manifest(out, "encoder_backward", e, h);
  out.push_back({"init.weight", h, h});
  out.push_back({"init.bias", 1, h});
  gru_manifest(out, "decoder", e + 2 * h, h);
  out.push_back({"attention.state", h, a});
  out.push_back({"attention.source", 2 * h, a});
  out.push_back({"attention.prev", e, a});
  out.push_back({"attention.bias", 1, a});
  out.push_back({"attention.score", a, 1});
  out.push_back({"output.weight", e + h + 2 * h, c.target_vocab});
  out.push_back({"output.bias", 1, c.target_vocab});
  return out;
}

std::vector<NamedTensor> ModelParams::tensors() {
  std::vector<NamedTensor> out;
  out.push_back({"source_embedding", &source_embedding});
  out.push_back({"target_embedding", &target_embedding});
  gru_tensors(out, "encoder_forward", encoder_forward);
  gru_tensors(out, "encoder_backward", encoder_backward);
  out.push_back({"init.weight", &init_weight});
  out.push_back({"init.bias", &init_bias});
  gru_tensors(out, "decoder", decoder);
  out.push_back({"attention.state", &attention_state});
  out.push_back({"attention.source", &attention_source});
  out.push_back({"attention.prev", &attention_prev});
  out.push_back({"attention.bias", &attention_bias});
  out.push_back({"attention.score", &attention_score});
  out.push_back({"output.weight", &output_weight});
  out.push_back({"output.bias", &output_bias});
  return out;
}

std::vector<TensorShape> ModelParams::shapes() const {
  std::vector<TensorShape> out;
  for (const NamedTensor& t : const_cast<ModelParams*>(this)->tensors()) {
    out.push_back({t.name, t.value->rows(), t.value->cols()});
  }
  return out;
}

void ModelParams::check_manifest() const {
  const auto expected = manifest(config);
  const auto actual = shapes();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (!(actual[i] == expected[i])) {
      throw LoadError("tensor " + expected[i].name + " has shape " + std::to_string(actual[i].rows) +
                      "x" + std::to_string(actual[i].cols) + ", manifest expects " +
                      std::to_string(expected[i].rows) + "x" + std::to_string(expected[i].cols));
    }
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const TensorShape& s : shapes()) total += s.rows * s.cols;
  return total;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  const auto shapes = manifest(config);
  auto tensors = p.tensors();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    *tensors[i].value = Matrix(shapes[i].rows, shapes[i].cols);
  }
  return p;
}

ModelParams ModelParams::initialized(const ModelConfig& config, std::uint64_t seed, double scale) {
  ModelParams p = zeros(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (NamedTensor& t : p.tensors())
    for (double& x : t.value->values()) x = dist(rng);
  return p;
}

BoundParams::BoundParams(Tape& tape, const ModelParams& params, ModelParams* grads)
    : tape(tape), config(params.config) {
  auto bind = [&](const Matrix& value, Matrix* grad) { return tape.parameter(value, grad); };
  auto bind_gru = [&](const GruParams& g, GruParams* gg) {
    return Gru{bind(g.input, gg ? &gg->input : nullptr), bind(g.gates, gg ? &gg->gates : nullptr),
               bind(g.candidate, gg ? &gg->candidate : nullptr),
               bind(g.bias, gg ? &gg->bias : nullptr)};
  };
  ModelParams* g = grads;
  source_embedding = bind(params.source_embedding, g ? &g->source_embedding : nullptr);
  target_embedding = bind(params.target_embedding, g ? &g->target_embedding : nullptr);
  encoder_forward = bind_gru(params.encoder_forward, g ? &g->encoder_forward : nullptr);
  encoder_backward = bind_gru(params.encoder_backward, g ? &g->encoder_backward : nullptr);
  init_weight = bind(params.init_weight, g ? &g->init_weight : nullptr);
  init_bias = bind(params.init_bias, g ? &g->init_bias : nullptr);
  decoder = bind_gru(params.decoder, g ? &g->decoder : nullptr);
  attention_state = bind(params.attention_state, g ? &g->attention_state : nullptr);
  attention_source = bind(params.attention_source, g ? &g->attention_source : nullptr);
  attention_prev = bind(params.attention_prev, g ? &g->attention_prev : nullptr);
  attention_bias = bind(params.attention_bias, g ? &g->attention_bias : nullptr);
  attention_score = bind(params.attention_score, g ? &g->attention_score : nullptr);
  output_weight = bind(params.output_weight, g ? &g->output_weight : nullptr);
  output_bias = bind(params.output_bias, g ? &g->output_bias : nullptr);
}

std::vector<double> StepOutput::distribution() const {
  std::vector<double> out;
  for (double lp : log_probs.value().values()) out.push_back(std::exp(lp));
  return out;
}

Var gru_step(const BoundParams::Gru& gru, Var projected_input, Var h_prev, std::size_t hidden) {
  const Var recurrent = matmul(h_prev, gru.gates);
  const Var z = sigmoid(add(slice_cols(projected_input, 0, hidden), slice_cols(recurrent, 0, hidden)));
  const Var r =
      sigmoid(add(slice_cols(projected_input, hidden, hidden), slice_cols(recurrent, hidden, hidden)));
  const Var candidate = tanh(add(slice_cols(projected_input, 2 * hidden, hidden),
                                 matmul(hadamard(r, h_prev), gru.candidate)));
  // (1 - z) ∘ h_prev + z ∘ candidate
  return add(h_prev, hadamard(z, subtract(candidate, h_prev)));
}

namespace {

void check_tokens(std::span<const Token> seq, std::size_t vocab, const char* side) {
  if (seq.empty() || seq.back() != kEol) {
    throw DomainError(std::string(side) + " sequence must end with eol");
  }
  for (Token t : seq) {
    if (t >= vocab) {
      throw DomainError(std::string(side) + " token " + std::to_string(t) +
                        " outside embedding table of " + std::to_string(vocab) + " rows");
    }
  }
}

std::vector<Var> run_gru(const BoundParams& p, const BoundParams::Gru& gru, Var projected,
                         bool reverse) {
  const std::size_t len = projected.rows();
  const std::size_t h = p.config.hidden_dim;
  std::vector<Var> states(len);
  Var state = p.tape.constant(Matrix(1, h));
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t i = reverse ? len - 1 - k : k;
    state = gru_step(gru, slice_row(projected, i), state, h);
    states[i] = state;
  }
  return states;
}

Var attend_embedded(const BoundParams& p, Var prev_embedding, Var h_prev, const EncoderStates& enc) {
  const Var query = add(add(matmul(h_prev, p.attention_state), matmul(prev_embedding, p.attention_prev)),
                        p.attention_bias);
  const Var hidden = tanh(add_row_broadcast(enc.attention_keys, query));
  return softmax(transpose(matmul(hidden, p.attention_score)));
}

}  // namespace

EncoderStates encode(const BoundParams& p, std::span<const Token> source) {
  check_tokens(source, p.config.source_vocab, "source");
  std::vector<Var> rows;
  rows.reserve(source.size());
  for (Token t : source) rows.push_back(gather_row(p.source_embedding, t));
  const Var embedded = stack_rows(rows);

  const Var fwd_in = add_row_broadcast(matmul(embedded, p.encoder_forward.input), p.encoder_forward.bias);
  const Var bwd_in =
      add_row_broadcast(matmul(embedded, p.encoder_backward.input), p.encoder_backward.bias);
  const auto fwd = run_gru(p, p.encoder_forward, fwd_in, false);
  const auto bwd = run_gru(p, p.encoder_backward, bwd_in, true);

  std::vector<Var> joined;
  joined.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Var parts[] = {fwd[i], bwd[i]};
    joined.push_back(concat_cols(parts));
  }
  EncoderStates enc;
  enc.states = stack_rows(joined);
  enc.attention_keys = matmul(enc.states, p.attention_source);
  enc.backward_first = bwd.front();
  return enc;
}

Var initial_state(const BoundParams& p, const EncoderStates& enc) {
  return tanh(add(matmul(enc.backward_first, p.init_weight), p.init_bias));
}

Var attend(const BoundParams& p, Token y_prev, Var h_prev, const EncoderStates& enc) {
  if (y_prev >= p.config.target_vocab) throw DomainError("attend: target token out of range");
  return attend_embedded(p, gather_row(p.target_embedding, y_prev), h_prev, enc);
}

StepOutput decoder_step(const BoundParams& p, Token y_prev, Var h_prev, const EncoderStates& enc) {
  if (y_prev >= p.config.target_vocab) throw DomainError("decoder_step: target token out of range");
  if (h_prev.rows() != 1 || h_prev.cols() != p.config.hidden_dim) {
    throw ShapeError("decoder_step: hidden state is " + h_prev.value().shape_string());
  }
  const Var emb = gather_row(p.target_embedding, y_prev);
  const Var alpha = attend_embedded(p, emb, h_prev, enc);
  const Var context = matmul(alpha, enc.states);
  const Var input_parts[] = {emb, context};
  const Var projected = add(matmul(concat_cols(input_parts), p.decoder.input), p.decoder.bias);
  const Var h = gru_step(p.decoder, projected, h_prev, p.config.hidden_dim);
  const Var features[] = {emb, h, context};
  const Var logits = add(matmul(concat_cols(features), p.output_weight), p.output_bias);
  return {{h, context, alpha}, log_softmax(logits)};
}

TeacherForced forward_teacher_forced(const BoundParams& p, const SentencePair& pair) {
  check_tokens(pair.target, p.config.target_vocab, "target");
  const EncoderStates enc = encode(p, pair.source);
  Var h = initial_state(p, enc);
  TeacherForced out;
  std::vector<Var> alphas;
  Token prev = kEol;
  for (Token gold : pair.target) {
    StepOutput step = decoder_step(p, prev, h, enc);
    out.gold_log_probs.push_back(pick(step.log_probs, 0, gold));
    alphas.push_back(step.state.alpha);
    h = step.state.h;
    prev = gold;
  }
  out.alpha = stack_rows(alphas);
  return out;
}

}  // namespace sanmt
