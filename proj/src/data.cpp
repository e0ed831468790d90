#include "sanmt/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "sanmt/errors.hpp"

namespace sanmt {

Vocab::Vocab() {
  add(std::string(kEolSurface));
  add(std::string(kUnkSurface));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[kEol] != kEolSurface || tokens[kUnk] != kUnkSurface) {
    throw ParseError("vocabulary must start with the reserved " + std::string(kEolSurface) +
                     " and " + std::string(kUnkSurface) + " entries");
  }
  Vocab vocab;
  for (std::size_t i = 2; i < tokens.size(); ++i) vocab.add(std::move(tokens[i]));
  return vocab;
}

void Vocab::add(std::string token) {
  if (index_.contains(token)) throw ConsistencyError("duplicate vocabulary entry '" + token + "'");
  index_.emplace(token, static_cast<Token>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Token Vocab::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(Token index) const {
  if (index >= tokens_.size()) return tokens_[kUnk];
  return tokens_[index];
}

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t cap) {
  if (cap < 3) throw DomainError("build_vocab: cap must be at least 3, got " + std::to_string(cap));
  std::map<std::string, std::size_t> counts;
  for (const std::string& line : corpus)
    for (std::string& tok : split_tokens(line)) ++counts[std::move(tok)];
  if (counts.empty()) throw DomainError("build_vocab: corpus has no tokens");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // map iteration is already in ascending key order; stable sort keeps it for ties
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab vocab;
  for (auto& [token, count] : ranked) {
    if (vocab.size() >= cap) break;
    if (token == kEolSurface || token == kUnkSurface) continue;
    vocab.add(token);
  }
  return vocab;
}

TokenSeq encode(std::string_view line, const Vocab& vocab) {
  TokenSeq out;
  for (const std::string& tok : split_tokens(line)) out.push_back(vocab.index_of(tok));
  out.push_back(kEol);
  return out;
}

std::string decode(std::span<const Token> tokens, const Vocab& vocab) {
  std::size_t end = tokens.size();
  if (end > 0 && tokens[end - 1] == kEol) --end;
  std::string out;
  for (std::size_t i = 0; i < end; ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(tokens[i]);
  }
  return out;
}

void validate_pair(const SentencePair& pair, std::size_t source_vocab, std::size_t target_vocab) {
  auto check = [](const TokenSeq& seq, std::size_t vocab, const char* side) {
    if (seq.empty() || seq.back() != kEol) {
      throw DomainError(std::string(side) + " sequence must end with eol");
    }
    for (Token t : seq) {
      if (t >= vocab) {
        throw DomainError(std::string(side) + " token index " + std::to_string(t) +
                          " outside vocabulary of size " + std::to_string(vocab));
      }
    }
  };
  check(pair.source, source_vocab, "source");
  check(pair.target, target_vocab, "target");
}

std::vector<std::size_t> length_filter(std::span<const SentencePair> pairs, std::size_t max_len) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].m() <= max_len && pairs[i].n() <= max_len) kept.push_back(i);
  }
  return kept;
}

std::vector<SentencePair> filter_by_length(std::span<const SentencePair> pairs, std::size_t max_len) {
  std::vector<SentencePair> out;
  for (std::size_t i : length_filter(pairs, max_len)) out.push_back(pairs[i]);
  return out;
}

namespace {

void pad_into(const std::vector<SentencePair>& pairs, bool source, std::vector<TokenSeq>& grid,
              std::vector<std::vector<std::uint8_t>>& mask) {
  std::size_t width = 0;
  for (const auto& p : pairs) width = std::max(width, (source ? p.source : p.target).size());
  for (const auto& p : pairs) {
    const TokenSeq& seq = source ? p.source : p.target;
    TokenSeq row(width, kEol);
    std::vector<std::uint8_t> m(width, 0);
    std::copy(seq.begin(), seq.end(), row.begin());
    std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(seq.size()), 1);
    grid.push_back(std::move(row));
    mask.push_back(std::move(m));
  }
}

}  // namespace

std::vector<Batch> make_batches(std::span<const SentencePair> pairs,
                                const std::vector<Matrix>* supervision, std::size_t batch_size,
                                std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw DomainError("make_batches: batch size must be positive");
  if (supervision != nullptr && supervision->size() != pairs.size()) {
    throw ConsistencyError("make_batches: " + std::to_string(supervision->size()) +
                           " supervision matrices for " + std::to_string(pairs.size()) + " pairs");
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch batch;
    const std::size_t end = std::min(order.size(), start + batch_size);
    if (supervision != nullptr) batch.supervision.emplace();
    for (std::size_t k = start; k < end; ++k) {
      batch.indices.push_back(order[k]);
      batch.pairs.push_back(pairs[order[k]]);
      if (supervision != nullptr) batch.supervision->push_back((*supervision)[order[k]]);
    }
    pad_into(batch.pairs, true, batch.source_grid, batch.source_mask);
    pad_into(batch.pairs, false, batch.target_grid, batch.target_mask);
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const std::string& line : lines) out << line << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

void save_vocab(const std::filesystem::path& path, const Vocab& vocab) {
  write_lines(path, vocab.tokens());
}

Vocab load_vocab(const std::filesystem::path& path) {
  try {
    return Vocab::from_tokens(read_lines(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ParallelText read_parallel(const std::filesystem::path& source, const std::filesystem::path& target) {
  ParallelText text{read_lines(source), read_lines(target)};
  if (text.source.size() != text.target.size()) {
    throw ConsistencyError("line count mismatch: " + source.string() + " has " +
                           std::to_string(text.source.size()) + " lines, " + target.string() +
                           " has " + std::to_string(text.target.size()));
  }
  return text;
}

std::vector<SentencePair> encode_parallel(const ParallelText& text, const Vocab& source_vocab,
                                          const Vocab& target_vocab) {
  std::vector<SentencePair> pairs;
  pairs.reserve(text.source.size());
  for (std::size_t i = 0; i < text.source.size(); ++i) {
    pairs.push_back({encode(text.source[i], source_vocab), encode(text.target[i], target_vocab)});
  }
  return pairs;
}

}  // namespace sanmt
