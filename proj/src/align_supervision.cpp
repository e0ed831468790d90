#include "sanmt/align_supervision.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "sanmt/data.hpp"
#include "sanmt/errors.hpp"

namespace sanmt {

namespace {

std::optional<std::size_t> parse_index(std::string_view text) {
  std::size_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

HardAlignment parse_pharaoh(std::string_view line, std::size_t m, std::size_t n,
                            PharaohOrder order) {
  HardAlignment out{m, n, {}};
  const auto tokens = split_tokens(line);
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const std::string& tok = tokens[pos];
    const std::size_t dash = tok.find('-');
    auto fail = [&](const std::string& why) {
      throw ParseError("alignment token " + std::to_string(pos + 1) + " '" + tok + "': " + why);
    };
    if (dash == std::string::npos) fail("expected i-j");
    auto first = parse_index(std::string_view(tok).substr(0, dash));
    auto second = parse_index(std::string_view(tok).substr(dash + 1));
    if (!first || !second) fail("expected i-j");
    Link link = order == PharaohOrder::SourceTarget ? Link{*first, *second} : Link{*second, *first};
    if (link.source >= m) fail("source index out of range for length " + std::to_string(m));
    if (link.target >= n) fail("target index out of range for length " + std::to_string(n));
    out.links.insert(link);
  }
  return out;
}

std::string format_pharaoh(const LinkSet& links) {
  std::string out;
  for (const Link& l : links) {
    if (!out.empty()) out += ' ';
    out += std::to_string(l.source) + "-" + std::to_string(l.target);
  }
  return out;
}

Matrix to_supervision(const HardAlignment& hard) {
  const std::size_t m = hard.m, n = hard.n;
  Matrix out(n + 1, m + 1);

  std::vector<std::vector<std::size_t>> per_target(n);
  for (const Link& l : hard.links) per_target[l.target].push_back(l.source);

  std::vector<std::size_t> aligned;
  for (std::size_t t = 0; t < n; ++t) {
    if (per_target[t].empty()) continue;
    aligned.push_back(t);
    const double mass = 1.0 / static_cast<double>(per_target[t].size());
    for (std::size_t s : per_target[t]) out(t, s) = mass;
  }

  if (aligned.empty()) {
    for (std::size_t t = 0; t < n; ++t) {
      if (m == 0) {
        out(t, m) = 1.0;  // nothing but eol to attend to
      } else {
        for (std::size_t s = 0; s < m; ++s) out(t, s) = 1.0 / static_cast<double>(m);
      }
    }
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      if (!per_target[t].empty()) continue;
      std::size_t best = aligned.front();
      std::size_t best_dist = n + 1;
      for (std::size_t a : aligned) {
        const std::size_t dist = a > t ? a - t : t - a;
        // `aligned` is ascending, so <= lets the right neighbour win ties.
        if (dist <= best_dist) {
          best = a;
          best_dist = dist;
        }
      }
      auto src = out.row(best);
      auto dst = out.row(t);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  out(n, m) = 1.0;
  return out;
}

bool is_row_stochastic(const Matrix& m, double tolerance) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double total = 0.0;
    for (double x : m.row(r)) {
      if (!(x >= 0.0)) return false;
      total += x;
    }
    if (std::abs(total - 1.0) > tolerance) return false;
  }
  return true;
}

void save_supervision(const std::filesystem::path& path, std::span<const Matrix> matrices) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Matrix& mat : matrices) {
    out << mat.rows() << ' ' << mat.cols() << '\n';
    for (std::size_t r = 0; r < mat.rows(); ++r) {
      for (std::size_t c = 0; c < mat.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(mat(r, c));
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("write failure on " + path.string());
}

std::vector<Matrix> load_supervision(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<Matrix> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": " + why);
  };
  while (i < lines.size()) {
    const auto header = split_tokens(lines[i]);
    if (header.empty()) {
      ++i;
      continue;
    }
    if (header.size() != 2) fail("expected 'rows cols'");
    auto rows = parse_index(header[0]);
    auto cols = parse_index(header[1]);
    if (!rows || !cols) fail("expected 'rows cols'");
    Matrix mat(*rows, *cols);
    for (std::size_t r = 0; r < *rows; ++r) {
      ++i;
      if (i >= lines.size()) fail("truncated matrix");
      const auto values = split_tokens(lines[i]);
      if (values.size() != *cols) fail("expected " + std::to_string(*cols) + " values");
      for (std::size_t c = 0; c < *cols; ++c) {
        try {
          mat(r, c) = parse_double(values[c]);
        } catch (const ParseError& e) {
          fail(e.what());
        }
      }
    }
    out.push_back(std::move(mat));
    ++i;
  }
  return out;
}

}  // namespace sanmt
