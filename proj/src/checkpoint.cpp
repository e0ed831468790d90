#include "sanmt/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "sanmt/errors.hpp"

namespace sanmt {

namespace {

std::size_t to_count(const LineReader& reader, const std::string& text) {
  std::size_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    reader.fail("expected a count, got '" + text + "'");
  }
  return value;
}

void write_vocab(std::ostream& out, const char* side, const Vocab& vocab) {
  out << "vocab " << side << ' ' << vocab.size() << '\n';
  for (const std::string& tok : vocab.tokens()) out << tok << '\n';
}

Vocab read_vocab(LineReader& in, const char* side) {
  const auto header = in.next_fields();
  if (header.size() != 3 || header[0] != "vocab" || header[1] != side) {
    in.fail(std::string("expected 'vocab ") + side + " <count>'");
  }
  std::vector<std::string> tokens(to_count(in, header[2]));
  for (std::string& tok : tokens) tok = in.next();
  try {
    return Vocab::from_tokens(std::move(tokens));
  } catch (const DataError& e) {
    in.fail(e.what());
  }
}

}  // namespace

LineReader::LineReader(std::filesystem::path path) : path_(std::move(path)) {
  lines_ = read_lines(path_);
}

const std::string& LineReader::next() {
  if (pos_ >= lines_.size()) fail("unexpected end of file");
  return lines_[pos_++];
}

std::vector<std::string> LineReader::next_fields() { return split_tokens(next()); }

void LineReader::fail(const std::string& why) const {
  throw LoadError(path_.string() + ":" + std::to_string(pos_) + ": " + why);
}

Matrix LineReader::read_tensor(const std::string& expected_name) {
  const auto header = next_fields();
  if (header.size() != 4 || header[0] != "tensor") fail("expected 'tensor <name> <rows> <cols>'");
  if (header[1] != expected_name) {
    fail("expected tensor " + expected_name + ", found " + header[1]);
  }
  Matrix value(to_count(*this, header[2]), to_count(*this, header[3]));
  for (std::size_t r = 0; r < value.rows(); ++r) {
    const auto fields = next_fields();
    if (fields.size() != value.cols()) fail("row has " + std::to_string(fields.size()) + " values");
    for (std::size_t c = 0; c < value.cols(); ++c) {
      try {
        value(r, c) = parse_double(fields[c]);
      } catch (const ParseError& e) {
        fail(e.what());
      }
      if (!std::isfinite(value(r, c))) fail("non-finite value in tensor " + expected_name);
    }
  }
  return value;
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& value) {
  out << "tensor " << name << ' ' << value.rows() << ' ' << value.cols() << '\n';
  for (std::size_t r = 0; r < value.rows(); ++r) {
    for (std::size_t c = 0; c < value.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(value(r, c));
    }
    out << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const ModelConfig& c = ckpt.params.config;
  out << "sanmt-checkpoint " << kCheckpointVersion << '\n';
  out << "config " << c.source_vocab << ' ' << c.target_vocab << ' ' << c.embedding_dim << ' '
      << c.hidden_dim << ' ' << c.attention_dim << '\n';
  write_vocab(out, "source", ckpt.source_vocab);
  write_vocab(out, "target", ckpt.target_vocab);
  auto tensors = const_cast<ModelParams&>(ckpt.params).tensors();
  out << "tensors " << tensors.size() << '\n';
  for (const NamedTensor& t : tensors) write_tensor(out, t.name, *t.value);
  out << "end\n";
  if (!out) throw IoError("write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  LineReader in(path);
  const auto header = in.next_fields();
  if (header.size() != 2 || header[0] != "sanmt-checkpoint") in.fail("not a sanmt checkpoint");
  if (header[1] != std::to_string(kCheckpointVersion)) {
    in.fail("unsupported checkpoint version " + header[1]);
  }
  const auto config_fields = in.next_fields();
  if (config_fields.size() != 6 || config_fields[0] != "config") in.fail("malformed config line");
  ModelConfig config;
  config.source_vocab = to_count(in, config_fields[1]);
  config.target_vocab = to_count(in, config_fields[2]);
  config.embedding_dim = to_count(in, config_fields[3]);
  config.hidden_dim = to_count(in, config_fields[4]);
  config.attention_dim = to_count(in, config_fields[5]);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    in.fail(e.what());
  }

  Checkpoint ckpt;
  ckpt.source_vocab = read_vocab(in, "source");
  ckpt.target_vocab = read_vocab(in, "target");
  if (ckpt.source_vocab.size() != config.source_vocab ||
      ckpt.target_vocab.size() != config.target_vocab) {
    in.fail("vocabulary sizes disagree with config");
  }

  const auto manifest = ModelParams::manifest(config);
  const auto count_fields = in.next_fields();
  if (count_fields.size() != 2 || count_fields[0] != "tensors") in.fail("expected 'tensors <count>'");
  if (to_count(in, count_fields[1]) != manifest.size()) {
    in.fail("checkpoint has " + count_fields[1] + " tensors, manifest expects " +
            std::to_string(manifest.size()));
  }
  ckpt.params.config = config;
  auto tensors = ckpt.params.tensors();
  for (std::size_t i = 0; i < manifest.size(); ++i) *tensors[i].value = in.read_tensor(manifest[i].name);
  ckpt.params.check_manifest();
  if (in.next() != "end") in.fail("expected 'end'");
  return ckpt;
}

}  // namespace sanmt
