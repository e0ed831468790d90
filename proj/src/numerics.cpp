#include "sanmt/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "sanmt/errors.hpp"

namespace sanmt {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

namespace kernels {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  const std::size_t n = a.rows(), k_dim = a.cols(), m = b.cols();
  if (!accumulate) out.fill(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    const double* a_row = a.data() + i * k_dim;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const double* b_row = b.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aik * b_row[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), k_dim = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = a.data() + i * k_dim;
    double* out_row = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* b_row = b.data() + j * k_dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
      out_row[j] += acc;
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), k_dim = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = a.data() + i * k_dim;
    const double* b_row = b.data() + i * m;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      double* out_row = out.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += aik * b_row[j];
    }
  }
}

}  // namespace kernels

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  kernels::gemm_nn(a, b, out, true);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  return zip(a, b, "subtract", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& a, double s) {
  return map(a, [s](double x) { return x * s; });
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix tanh(const Matrix& a) {
  return map(a, [](double x) { return std::tanh(x); });
}

Matrix sigmoid(const Matrix& a) {
  return map(a, [](double x) { return sigmoid(x); });
}

std::vector<double> softmax_row(std::span<const double> v) {
  if (v.empty()) throw DomainError("softmax_row: empty input");
  const double peak = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> log_softmax_row(std::span<const double> v) {
  if (v.empty()) throw DomainError("log_softmax_row: empty input");
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - peak);
  const double log_norm = peak + std::log(total);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - log_norm;
  return out;
}

double clamped_log(double x) { return std::log(std::max(x, kLogClamp)); }

double sum(const Matrix& a) {
  double total = 0.0;
  for (double x : a.values()) total += x;
  return total;
}

double squared_norm(const Matrix& a) {
  double total = 0.0;
  for (double x : a.values()) total += x * x;
  return total;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double x) { return std::isfinite(x); });
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace sanmt
