#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sanmt/align_supervision.hpp"
#include "sanmt/decoding.hpp"
#include "sanmt/model.hpp"

namespace sanmt::oracle {

// Supervision by search outward from each unlinked row: distance d = 1, 2, ...
// checking t+d before t-d.
inline std::vector<std::vector<double>> supervision(const HardAlignment& hard) {
  const std::size_t m = hard.m, n = hard.n;
  std::vector<std::vector<int>> linked(n, std::vector<int>(m, 0));
  for (const Link& l : hard.links) linked[l.target][l.source] = 1;
  std::vector<std::vector<double>> own(n, std::vector<double>(m + 1, 0.0));
  std::vector<bool> has(n, false);
  bool any = false;
  for (std::size_t t = 0; t < n; ++t) {
    int k = 0;
    for (int x : linked[t]) k += x;
    if (k == 0) continue;
    has[t] = any = true;
    for (std::size_t s = 0; s < m; ++s) own[t][s] = linked[t][s] ? 1.0 / k : 0.0;
  }
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(m + 1, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    if (!any) {
      if (m == 0) rows[t][0] = 1.0;
      for (std::size_t s = 0; s < m; ++s) rows[t][s] = 1.0 / m;
      continue;
    }
    if (has[t]) {
      rows[t] = own[t];
      continue;
    }
    for (std::size_t d = 1;; ++d) {
      if (t + d < n && has[t + d]) {
        rows[t] = own[t + d];
        break;
      }
      if (t >= d && has[t - d]) {
        rows[t] = own[t - d];
        break;
      }
    }
  }
  rows[n][m] = 1.0;
  return rows;
}

// Log-probability of every complete sequence of at most max_len tokens, where
// a sequence is complete when it ends in eol or reaches max_len. Returns the
// best one under the decoder's order: score, then shorter, then lexicographic.
struct Scored {
  TokenSeq tokens;
  double log_prob = 0.0;
};

inline Scored exhaustive_best(const ModelParams& params, std::span<const Token> source, std::size_t max_len) {
  Scored best;
  bool have = false;
  auto better = [](const Scored& a, const Scored& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
    return a.tokens < b.tokens;
  };
  std::function<void(TokenSeq&, double)> walk = [&](TokenSeq& prefix, double score) {
    // Re-run the decoder from scratch for every prefix; slow but independent
    // of any incremental state handling.
    Tape tape(false);
    const BoundParams p(tape, params);
    const EncoderStates enc = encode(p, source);
    Var h = initial_state(p, enc);
    Token prev = kEol;
    StepOutput step{};
    for (Token y : prefix) {
      step = decoder_step(p, prev, h, enc);
      h = step.state.h;
      prev = y;
    }
    step = decoder_step(p, prev, h, enc);
    const Matrix& lp = step.log_probs.value();
    for (Token y = 0; y < lp.cols(); ++y) {
      prefix.push_back(y);
      const double s = score + lp[y];
      if (y == kEol || prefix.size() == max_len) {
        const Scored cand{prefix, s};
        if (!have || better(cand, best)) {
          best = cand;
          have = true;
        }
      } else {
        walk(prefix, s);
      }
      prefix.pop_back();
    }
  };
  TokenSeq prefix;
  walk(prefix, 0.0);
  return best;
}

}  // namespace sanmt::oracle
