#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sanmt/numerics.hpp"

namespace sanmt {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

inline constexpr Token kEol = 0;
inline constexpr Token kUnk = 1;
inline constexpr std::string_view kEolSurface = "<eol>";
inline constexpr std::string_view kUnkSurface = "<unk>";

// Large-corpus defaults.
inline constexpr std::size_t kDefaultVocabCap = 30000;
inline constexpr std::size_t kDefaultMaxLen = 50;
inline constexpr std::size_t kDefaultBatchSize = 80;

class Vocab {
 public:
  Vocab();

  // Rebuilds a vocabulary from its index-ordered token list (as written by
  // save_vocab). The first two entries must be the reserved surfaces.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  Token index_of(std::string_view token) const;
  const std::string& token(Token index) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  void add(std::string token);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Token> index_;
};

std::vector<std::string> split_tokens(std::string_view line);

// Most frequent tokens first, ties in ascending byte order; keeps cap-2 real
// tokens after the reserved eol/unk entries.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t cap);

TokenSeq encode(std::string_view line, const Vocab& vocab);
// Inverse of encode with a trailing eol stripped; unknown ids print as <unk>.
std::string decode(std::span<const Token> tokens, const Vocab& vocab);

struct SentencePair {
  TokenSeq source;  // x_1..x_m, eol
  TokenSeq target;  // y_1..y_n, eol

  std::size_t m() const { return source.size() - 1; }
  std::size_t n() const { return target.size() - 1; }
};

void validate_pair(const SentencePair& pair, std::size_t source_vocab, std::size_t target_vocab);

// Indices of pairs whose pre-eol lengths are both <= max_len.
std::vector<std::size_t> length_filter(std::span<const SentencePair> pairs, std::size_t max_len);
std::vector<SentencePair> filter_by_length(std::span<const SentencePair> pairs, std::size_t max_len);

struct Batch {
  std::vector<std::size_t> indices;  // positions in the input pair list
  std::vector<SentencePair> pairs;
  std::vector<TokenSeq> source_grid;  // padded with eol
  std::vector<TokenSeq> target_grid;
  std::vector<std::vector<std::uint8_t>> source_mask;
  std::vector<std::vector<std::uint8_t>> target_mask;
  std::optional<std::vector<Matrix>> supervision;
};

std::vector<Batch> make_batches(std::span<const SentencePair> pairs,
                                const std::vector<Matrix>* supervision, std::size_t batch_size,
                                std::uint64_t shuffle_seed);

// File helpers. Errors carry the path.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);
void save_vocab(const std::filesystem::path& path, const Vocab& vocab);
Vocab load_vocab(const std::filesystem::path& path);

struct ParallelText {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

ParallelText read_parallel(const std::filesystem::path& source, const std::filesystem::path& target);

std::vector<SentencePair> encode_parallel(const ParallelText& text, const Vocab& source_vocab,
                                          const Vocab& target_vocab);

}  // namespace sanmt
