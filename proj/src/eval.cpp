#include "sanmt/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cwctype>
#include <limits>
#include <locale>
#include <map>
#include <random>

#include "sanmt/data.hpp"
#include "sanmt/errors.hpp"

namespace sanmt {

namespace {

const std::ctype<wchar_t>* unicode_ctype() {
  static const std::locale loc = [] {
    try {
      return std::locale("C.UTF-8");
    } catch (const std::runtime_error&) {
      return std::locale::classic();
    }
  }();
  return &std::use_facet<std::ctype<wchar_t>>(loc);
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::string lowercase(std::string_view text) {
  const auto* ctype = unicode_ctype();
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > text.size()) {
      out += text[i++];  // not UTF-8: pass the byte through
      continue;
    }
    char32_t cp = len == 1 ? lead : lead & (0x7F >> len);
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) valid = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid) {
      out += text[i++];
      continue;
    }
    if (len == 1) {
      out += static_cast<char>(lead >= 'A' && lead <= 'Z' ? lead - 'A' + 'a' : lead);
    } else {
      append_utf8(out, static_cast<char32_t>(ctype->tolower(static_cast<wchar_t>(cp))));
    }
    i += len;
  }
  return out;
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int k = 0; k < 4; ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

double BleuStats::score() const {
  if (candidate_length == 0) return 0.0;
  double log_precision = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (matches[k] == 0 || totals[k] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matches[k]) / static_cast<double>(totals[k]));
  }
  const double c = static_cast<double>(candidate_length);
  const double r = static_cast<double>(reference_length);
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_precision / 4.0);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& words, std::size_t order) {
  NgramCounts counts;
  for (std::size_t i = 0; i + order <= words.size(); ++i) {
    ++counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                      words.begin() + static_cast<std::ptrdiff_t>(i + order))];
  }
  return counts;
}

}  // namespace

BleuStats sentence_bleu_stats(std::string_view candidate, std::span<const std::string> references) {
  BleuStats stats;
  const auto cand = split_tokens(lowercase(candidate));
  std::vector<std::vector<std::string>> refs;
  for (const std::string& r : references) refs.push_back(split_tokens(lowercase(r)));

  stats.candidate_length = cand.size();
  std::size_t closest = std::numeric_limits<std::size_t>::max();
  std::size_t closest_diff = std::numeric_limits<std::size_t>::max();
  for (const auto& r : refs) {
    const std::size_t diff = r.size() > cand.size() ? r.size() - cand.size() : cand.size() - r.size();
    if (diff < closest_diff || (diff == closest_diff && r.size() < closest)) {
      closest = r.size();
      closest_diff = diff;
    }
  }
  stats.reference_length = refs.empty() ? 0 : closest;

  for (std::size_t order = 1; order <= 4; ++order) {
    const NgramCounts cand_counts = count_ngrams(cand, order);
    NgramCounts max_ref;
    for (const auto& r : refs)
      for (const auto& [gram, count] : count_ngrams(r, order)) max_ref[gram] = std::max(max_ref[gram], count);
    for (const auto& [gram, count] : cand_counts) {
      auto it = max_ref.find(gram);
      stats.matches[order - 1] += std::min(count, it == max_ref.end() ? 0 : it->second);
      stats.totals[order - 1] += count;
    }
  }
  return stats;
}

double bleu4(std::span<const std::string> candidates,
             std::span<const std::vector<std::string>> references) {
  if (references.empty()) throw ConsistencyError("bleu4: at least one reference set is required");
  for (const auto& set : references) {
    if (set.size() != candidates.size()) {
      throw ConsistencyError("bleu4: " + std::to_string(candidates.size()) + " candidate lines but " +
                             std::to_string(set.size()) + " reference lines");
    }
  }
  BleuStats total;
  std::vector<std::string> refs(references.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t k = 0; k < references.size(); ++k) refs[k] = references[k][i];
    total += sentence_bleu_stats(candidates[i], refs);
  }
  return total.score();
}

double bleu4(std::span<const std::string> candidates, std::span<const std::string> references) {
  const std::vector<std::vector<std::string>> sets{{references.begin(), references.end()}};
  return bleu4(candidates, sets);
}

namespace {

std::size_t parse_alignment_index(std::string_view text, std::string_view token) {
  std::size_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("malformed alignment link '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

GoldAlignment parse_gold_alignment(std::string_view line) {
  GoldAlignment gold;
  for (const std::string& tok : split_tokens(line)) {
    const std::size_t sep = tok.find_first_of("-?");
    if (sep == std::string::npos) throw ParseError("malformed alignment link '" + tok + "'");
    const Link link{parse_alignment_index(std::string_view(tok).substr(0, sep), tok),
                    parse_alignment_index(std::string_view(tok).substr(sep + 1), tok)};
    gold.possible.insert(link);
    if (tok[sep] == '-') gold.sure.insert(link);
  }
  return gold;
}

LinkSet parse_links(std::string_view line) {
  LinkSet links;
  for (const std::string& tok : split_tokens(line)) {
    const std::size_t sep = tok.find('-');
    if (sep == std::string::npos) throw ParseError("malformed alignment link '" + tok + "'");
    links.insert({parse_alignment_index(std::string_view(tok).substr(0, sep), tok),
                  parse_alignment_index(std::string_view(tok).substr(sep + 1), tok)});
  }
  return links;
}

AerCounts& AerCounts::operator+=(const AerCounts& other) {
  a_and_s += other.a_and_s;
  a_and_p += other.a_and_p;
  a += other.a;
  s += other.s;
  return *this;
}

double AerCounts::aer() const {
  if (a + s == 0) return 0.0;
  return 1.0 - static_cast<double>(a_and_s + a_and_p) / static_cast<double>(a + s);
}

AerCounts aer_counts(const LinkSet& system, const GoldAlignment& gold) {
  AerCounts c;
  c.a = system.size();
  c.s = gold.sure.size();
  for (const Link& l : system) {
    if (gold.sure.contains(l)) ++c.a_and_s;
    if (gold.possible.contains(l)) ++c.a_and_p;
  }
  return c;
}

double aer(std::span<const LinkSet> system, std::span<const GoldAlignment> gold) {
  if (system.size() != gold.size()) {
    throw ConsistencyError("aer: " + std::to_string(system.size()) + " system alignments but " +
                           std::to_string(gold.size()) + " gold alignments");
  }
  AerCounts total;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!std::includes(gold[i].possible.begin(), gold[i].possible.end(), gold[i].sure.begin(),
                       gold[i].sure.end())) {
      throw DataError("aer: sentence " + std::to_string(i + 1) + " has sure links outside its possible set");
    }
    total += aer_counts(system[i], gold[i]);
  }
  return total.aer();
}

namespace {

Interval percentile_interval(std::vector<double> samples) {
  if (samples.empty()) return {};
  std::sort(samples.begin(), samples.end());
  auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(samples.size() - 1)));
    return samples[idx];
  };
  return {at(0.025), at(0.975)};
}

}  // namespace

Interval bootstrap_bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                        std::size_t resamples, std::uint64_t seed) {
  if (candidates.size() != references.size()) {
    throw ConsistencyError("bootstrap_bleu: candidate/reference line counts differ");
  }
  std::vector<BleuStats> per_sentence;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    per_sentence.push_back(sentence_bleu_stats(candidates[i], references.subspan(i, 1)));
  }
  std::mt19937_64 rng(seed);
  std::vector<double> scores;
  for (std::size_t b = 0; b < resamples && !per_sentence.empty(); ++b) {
    BleuStats total;
    for (std::size_t k = 0; k < per_sentence.size(); ++k) total += per_sentence[rng() % per_sentence.size()];
    scores.push_back(total.score());
  }
  return percentile_interval(std::move(scores));
}

Interval bootstrap_aer(std::span<const LinkSet> system, std::span<const GoldAlignment> gold,
                       std::size_t resamples, std::uint64_t seed) {
  aer(system, gold);  // validates inputs
  std::vector<AerCounts> per_sentence;
  for (std::size_t i = 0; i < gold.size(); ++i) per_sentence.push_back(aer_counts(system[i], gold[i]));
  std::mt19937_64 rng(seed);
  std::vector<double> scores;
  for (std::size_t b = 0; b < resamples && !per_sentence.empty(); ++b) {
    AerCounts total;
    for (std::size_t k = 0; k < per_sentence.size(); ++k) total += per_sentence[rng() % per_sentence.size()];
    scores.push_back(total.aer());
  }
  return percentile_interval(std::move(scores));
}

}  // namespace sanmt
