#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sanmt/align_supervision.hpp"

namespace sanmt {

// Corpus-level n-gram statistics for BLEU; sums over sentences.
struct BleuStats {
  std::size_t matches[4] = {0, 0, 0, 0};
  std::size_t totals[4] = {0, 0, 0, 0};
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& other);
  double score() const;
};

std::string lowercase(std::string_view text);

// Statistics of one candidate against one or more references: clipping uses
// the maximum count over references, the reference length is the closest one
// (shorter on ties).
BleuStats sentence_bleu_stats(std::string_view candidate, std::span<const std::string> references);

// Case-insensitive corpus BLEU4 without smoothing. `references` holds one
// line list per reference set, each as long as `candidates`.
double bleu4(std::span<const std::string> candidates,
             std::span<const std::vector<std::string>> references);
double bleu4(std::span<const std::string> candidates, std::span<const std::string> references);

struct GoldAlignment {
  LinkSet sure;
  LinkSet possible;  // always a superset of sure
};

// "i-j" is a sure link, "i?j" possible only. Source index first.
GoldAlignment parse_gold_alignment(std::string_view line);
// Plain Pharaoh line without length checks.
LinkSet parse_links(std::string_view line);

struct AerCounts {
  std::size_t a_and_s = 0;
  std::size_t a_and_p = 0;
  std::size_t a = 0;
  std::size_t s = 0;

  AerCounts& operator+=(const AerCounts& other);
  // 1 - (|A∩S| + |A∩P|) / (|A| + |S|); 0 when both sets are empty.
  double aer() const;
};

AerCounts aer_counts(const LinkSet& system, const GoldAlignment& gold);

// Corpus micro-average. Throws ConsistencyError on count mismatch and
// DataError when a sentence's sure set is not inside its possible set.
double aer(std::span<const LinkSet> system, std::span<const GoldAlignment> gold);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap (2.5 / 97.5) over sentences.
Interval bootstrap_bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                        std::size_t resamples, std::uint64_t seed);
Interval bootstrap_aer(std::span<const LinkSet> system, std::span<const GoldAlignment> gold,
                       std::size_t resamples, std::uint64_t seed);

}  // namespace sanmt
