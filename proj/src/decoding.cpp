#include "sanmt/decoding.hpp"

#include <algorithm>

#include "sanmt/errors.hpp"
#include "sanmt/tape.hpp"

namespace sanmt {

namespace {

Matrix stack(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  Matrix out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  return out;
}

std::vector<double> copy_values(Var v) {
  return {v.value().values().begin(), v.value().values().end()};
}

}  // namespace

Translation greedy_decode(const ModelParams& params, std::span<const Token> source, std::size_t max_len) {
  if (max_len == 0) max_len = default_max_len(source.empty() ? 0 : source.size() - 1);
  Tape tape(false);
  const BoundParams p(tape, params);
  const EncoderStates enc = encode(p, source);
  Var h = initial_state(p, enc);
  Token prev = kEol;
  Translation out;
  std::vector<std::vector<double>> rows;
  for (std::size_t step = 0; step < max_len; ++step) {
    const StepOutput s = decoder_step(p, prev, h, enc);
    const auto lp = s.log_probs.value().values();
    const auto best = static_cast<Token>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    out.log_prob += lp[best];
    rows.push_back(copy_values(s.state.alpha));
    if (best == kEol) break;
    out.tokens.push_back(best);
    h = s.state.h;
    prev = best;
  }
  out.alpha = stack(rows, enc.length());
  return out;
}

Translation Hypothesis::translation() const {
  Translation out;
  out.tokens = tokens;
  if (!out.tokens.empty() && out.tokens.back() == kEol) out.tokens.pop_back();
  out.alpha = stack(attention, attention.empty() ? 0 : attention.front().size());
  out.log_prob = log_prob;
  return out;
}

namespace {

// Ordering of hypotheses with equal-length prefixes or final candidates.
bool better(double score_a, const TokenSeq& a, double score_b, const TokenSeq& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct Live {
  TokenSeq tokens;
  double log_prob = 0.0;
  Var h;
  std::vector<std::vector<double>> attention;
};

}  // namespace

Hypothesis beam_search(const ModelParams& params, std::span<const Token> source,
                       const BeamOptions& options) {
  if (options.beam < 1) throw ConfigError("beam size must be at least 1");
  const std::size_t max_len =
      options.max_len != 0 ? options.max_len : default_max_len(source.empty() ? 0 : source.size() - 1);
  Tape tape(false);
  const BoundParams p(tape, params);
  const EncoderStates enc = encode(p, source);

  std::vector<Live> live(1);
  live[0].h = initial_state(p, enc);
  std::vector<Hypothesis> completed;

  struct Candidate {
    double score;
    std::size_t parent;
    Token token;
    TokenSeq tokens;
  };

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<StepOutput> outputs;
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < live.size(); ++i) {
      outputs.push_back(decoder_step(p, live[i].tokens.empty() ? kEol : live[i].tokens.back(),
                                     live[i].h, enc));
      const auto lp = outputs.back().log_probs.value().values();
      for (std::size_t v = 0; v < lp.size(); ++v) {
        TokenSeq seq = live[i].tokens;
        seq.push_back(static_cast<Token>(v));
        candidates.push_back({live[i].log_prob + lp[v], i, static_cast<Token>(v), std::move(seq)});
      }
    }
    const std::size_t keep = std::min(candidates.size(), options.beam - completed.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        return better(a.score, a.tokens, b.score, b.tokens);
                      });

    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      Candidate& c = candidates[k];
      const Live& parent = live[c.parent];
      auto attention = parent.attention;
      attention.push_back(copy_values(outputs[c.parent].state.alpha));
      if (c.token == kEol) {
        completed.push_back({std::move(c.tokens), c.score, outputs[c.parent].state.h.value(),
                             std::move(attention), true});
      } else {
        next.push_back({std::move(c.tokens), c.score, outputs[c.parent].state.h, std::move(attention)});
      }
    }
    live = std::move(next);
  }
  for (Live& l : live) {
    completed.push_back({std::move(l.tokens), l.log_prob, l.h.value(), std::move(l.attention), false});
  }

  auto final_score = [&](const Hypothesis& hyp) {
    if (!options.length_normalize || hyp.tokens.empty()) return hyp.log_prob;
    return hyp.log_prob / static_cast<double>(hyp.tokens.size());
  };
  return *std::min_element(completed.begin(), completed.end(),
                           [&](const Hypothesis& a, const Hypothesis& b) {
                             return better(final_score(a), a.tokens, final_score(b), b.tokens);
                           });
}

Matrix force_decode(const ModelParams& params, const SentencePair& pair) {
  Tape tape(false);
  const BoundParams p(tape, params);
  return forward_teacher_forced(p, pair).alpha.value();
}

HardAlignment extract_hard_alignment(const Matrix& alpha) {
  if (alpha.rows() == 0 || alpha.cols() == 0) throw ShapeError("extract_hard_alignment: empty matrix");
  HardAlignment out{alpha.cols() - 1, alpha.rows() - 1, {}};
  for (std::size_t t = 0; t < out.n; ++t) {
    const auto row = alpha.row(t);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != out.m) out.links.insert({best, t});
  }
  return out;
}

}  // namespace sanmt
