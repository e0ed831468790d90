#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sanmt/align_supervision.hpp"
#include "sanmt/data.hpp"
#include "sanmt/model.hpp"

namespace sanmt {

inline constexpr std::size_t kDefaultBeam = 12;

// Decoding cap used when the caller passes max_len = 0.
inline std::size_t default_max_len(std::size_t source_words) { return 2 * source_words + 10; }

struct Translation {
  TokenSeq tokens;  // eol stripped
  Matrix alpha;     // one attention row per decoder step
  double log_prob = 0.0;
};

// Argmax at every step (lowest index on ties); stops after emitting eol or
// after max_len steps.
Translation greedy_decode(const ModelParams& params, std::span<const Token> source,
                          std::size_t max_len = 0);

struct Hypothesis {
  TokenSeq tokens;  // includes the final eol when finished
  double log_prob = 0.0;
  Matrix h;
  std::vector<std::vector<double>> attention;
  bool finished = false;

  Translation translation() const;
};

struct BeamOptions {
  std::size_t beam = kDefaultBeam;
  std::size_t max_len = 0;
  bool length_normalize = false;  // only affects the final pick
};

// Each step expands every live hypothesis over the full vocabulary and keeps
// the best (beam - completed) candidates; candidates ending in eol move to the
// completed pool. Stops when the pool holds `beam` hypotheses or after
// max_len steps, at which point survivors are completed unfinished. Ties:
// higher score, then shorter, then lexicographically smaller tokens.
Hypothesis beam_search(const ModelParams& params, std::span<const Token> source,
                       const BeamOptions& options = {});

// Teacher-forced attention matrix, (n+1)×(m+1).
Matrix force_decode(const ModelParams& params, const SentencePair& pair);

// One link per word row to its argmax source column (lowest index on ties);
// rows peaked on the source eol column and the eol row produce no link.
HardAlignment extract_hard_alignment(const Matrix& alpha);

}  // namespace sanmt
