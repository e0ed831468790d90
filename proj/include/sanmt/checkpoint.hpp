#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sanmt/data.hpp"
#include "sanmt/model.hpp"

namespace sanmt {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Vocab source_vocab;
  Vocab target_vocab;
};

// Text format, versioned header first:
//   sanmt-checkpoint 1
//   config <Vs> <Vt> <emb> <hidden> <attention>
//   vocab source <count>   (one token per line)
//   vocab target <count>
//   tensors <count>
//   tensor <name> <rows> <cols>   (one line of values per row)
//   end
// Values use shortest round-trip formatting, so save/load is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Shared "tensor <name> <rows> <cols>" block codec.
void write_tensor(std::ostream& out, const std::string& name, const Matrix& value);

class LineReader {
 public:
  LineReader(std::filesystem::path path);
  const std::string& next();  // throws LoadError at end of file
  std::vector<std::string> next_fields();
  [[noreturn]] void fail(const std::string& why) const;
  Matrix read_tensor(const std::string& expected_name);

 private:
  std::filesystem::path path_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

}  // namespace sanmt
