#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sanmt/numerics.hpp"

namespace sanmt {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }
};

// Reverse-mode recorder. Nodes are appended in evaluation order, so the
// recording order is already a topological order and backward() simply walks
// it in reverse. Single-threaded; use one tape per sentence.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix value);

  // Leaf bound to external storage. `value` must outlive the tape. When `grad`
  // is non-null its contents are the adjoint of this node: backward() adds
  // into it and never clears it, so one buffer can collect several tapes.
  Var parameter(const Matrix& value, Matrix* grad);

  const Matrix& value(std::size_t id) const;
  const Matrix& value(Var v) const { return value(v.id); }

  // Zero-shaped adjoint for unreachable nodes (never allocated).
  Matrix adjoint(Var v) const;

  void backward(Var loss);

  // Used by op implementations.
  Var push(Matrix value, Backward backward);
  Matrix& grad(std::size_t id);
  const Matrix& incoming(std::size_t id) const { return *adjoint_of(id); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external_value = nullptr;
    Matrix* external_grad = nullptr;
    Matrix adjoint;
    bool touched = false;
    Backward backward;
  };

  const Matrix* adjoint_of(std::size_t id) const;

  bool recording_;
  std::vector<Node> nodes_;
};

// Differentiable ops. All operands must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var add_row_broadcast(Var a, Var row);
Var subtract(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax(Var v);      // over all entries of a row or column vector
Var log_softmax(Var v);  // same shape rule as softmax
Var clamped_log(Var a);  // log(max(a, kLogClamp)); zero gradient where clamped
Var sum(Var a);
Var pick(Var a, std::size_t r, std::size_t c);
Var gather_row(Var table, std::size_t r);
Var slice_row(Var a, std::size_t r);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);

}  // namespace sanmt
