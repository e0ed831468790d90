#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sanmt {

// Lower bound applied to every argument of log() in the library.
inline constexpr double kLogClamp = 1e-12;

// Dense row-major matrix of doubles. Vectors are 1×n row matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  void fill(double value);
  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix tanh(const Matrix& a);
Matrix sigmoid(const Matrix& a);

double sigmoid(double x);
std::vector<double> softmax_row(std::span<const double> v);
std::vector<double> log_softmax_row(std::span<const double> v);
double clamped_log(double x);

double sum(const Matrix& a);
double squared_norm(const Matrix& a);
bool all_finite(const Matrix& a);
double max_abs_difference(const Matrix& a, const Matrix& b);

// Shortest text form that parses back to the identical double.
std::string format_double(double x);
// Throws ParseError on anything but a complete decimal number.
double parse_double(std::string_view text);

// Raw kernels shared with the tape: out (+)= a·b, a·bᵀ and aᵀ·b.
namespace kernels {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);  // always accumulates
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);  // always accumulates
}  // namespace kernels

}  // namespace sanmt
