#include "sanmt/tape.hpp"

#include <algorithm>
#include <cmath>

#include "sanmt/errors.hpp"

namespace sanmt {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const Matrix& value, Matrix* grad) {
  Node node;
  node.external_value = &value;
  if (recording_ && grad != nullptr) {
    if (!grad->same_shape(value)) {
      throw ShapeError("parameter gradient buffer " + grad->shape_string() +
                       " does not match value " + value.shape_string());
    }
    node.external_grad = grad;
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Matrix& Tape::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.external_value != nullptr ? *node.external_value : node.value;
}

Var Tape::push(Matrix value, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording_) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  node.touched = true;
  if (node.external_grad != nullptr) return *node.external_grad;
  if (node.adjoint.empty() && !value(id).empty()) {
    node.adjoint = Matrix(value(id).rows(), value(id).cols());
  }
  return node.adjoint;
}

const Matrix* Tape::adjoint_of(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.external_grad != nullptr ? node.external_grad : &node.adjoint;
}

Matrix Tape::adjoint(Var v) const {
  const Node& node = nodes_[v.id];
  if (!node.touched) return Matrix(value(v.id).rows(), value(v.id).cols());
  return *adjoint_of(v.id);
}

void Tape::backward(Var loss) {
  if (!recording_) throw Error("backward() on a tape created without gradient recording");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward() needs a 1x1 loss, got " + value(loss.id).shape_string());
  }
  grad(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.touched && node.backward) node.backward(*this, i);
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw Error("operands recorded on different tapes");
  return *a.tape;
}

void require_vector(const Matrix& m, const char* op) {
  if (m.rows() != 1 && m.cols() != 1) {
    throw ShapeError(std::string(op) + ": expected a vector, got " + m.shape_string());
  }
  if (m.empty()) throw DomainError(std::string(op) + ": empty input");
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = sanmt::matmul(a.value(), b.value());
  return t.push(std::move(out), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    kernels::gemm_nt(g, tp.value(b), tp.grad(a));
    kernels::gemm_tn(tp.value(a), g, tp.grad(b));
  });
}

Var transpose(Var a) {
  return a.tape->push(sanmt::transpose(a.value()), [a = a.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(sanmt::add(a.value(), b.value()), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Matrix& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Var add_row_broadcast(Var a, Var row) {
  Tape& t = tape_of(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row_broadcast: cannot broadcast " + rv.shape_string() + " over " +
                     av.shape_string());
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv[c];
  return t.push(std::move(out), [a = a.id, b = row.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    Matrix& gb = tp.grad(b);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
  });
}

Var subtract(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(sanmt::subtract(a.value(), b.value()),
                [a = a.id, b = b.id](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.incoming(self);
                  Matrix& ga = tp.grad(a);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  Matrix& gb = tp.grad(b);
                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a, b);
  return t.push(sanmt::hadamard(a.value(), b.value()),
                [a = a.id, b = b.id](Tape& tp, std::size_t self) {
                  const Matrix& g = tp.incoming(self);
                  const Matrix& av = tp.value(a);
                  const Matrix& bv = tp.value(b);
                  Matrix& ga = tp.grad(a);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                  Matrix& gb = tp.grad(b);
                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                });
}

Var scale(Var a, double s) {
  return a.tape->push(sanmt::scale(a.value(), s), [a = a.id, s](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var tanh(Var a) {
  return a.tape->push(sanmt::tanh(a.value()), [a = a.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    const Matrix& y = tp.value(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  return a.tape->push(sanmt::sigmoid(a.value()), [a = a.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    const Matrix& y = tp.value(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Var v) {
  const Matrix& x = v.value();
  require_vector(x, "softmax");
  Matrix out(x.rows(), x.cols(), softmax_row(x.values()));
  return v.tape->push(std::move(out), [a = v.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    const Matrix& y = tp.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - dot);
  });
}

Var log_softmax(Var v) {
  const Matrix& x = v.value();
  require_vector(x, "log_softmax");
  Matrix out(x.rows(), x.cols(), log_softmax_row(x.values()));
  return v.tape->push(std::move(out), [a = v.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    const Matrix& y = tp.value(self);
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) total += g[i];
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * total;
  });
}

Var clamped_log(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sanmt::clamped_log(x[i]);
  return a.tape->push(std::move(out), [a = a.id](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    const Matrix& xv = tp.value(a);
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > kLogClamp) ga[i] += g[i] / xv[i];
    }
  });
}

Var sum(Var a) {
  return a.tape->push(Matrix(1, 1, sanmt::sum(a.value())), [a = a.id](Tape& tp, std::size_t self) {
    const double g = tp.incoming(self)[0];
    Matrix& ga = tp.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var pick(Var a, std::size_t r, std::size_t c) {
  const Matrix& x = a.value();
  if (r >= x.rows() || c >= x.cols()) {
    throw ShapeError("pick: index (" + std::to_string(r) + "," + std::to_string(c) +
                     ") outside " + x.shape_string());
  }
  return a.tape->push(Matrix(1, 1, x(r, c)), [a = a.id, r, c](Tape& tp, std::size_t self) {
    tp.grad(a)(r, c) += tp.incoming(self)[0];
  });
}

Var gather_row(Var table, std::size_t r) {
  const Matrix& x = table.value();
  if (r >= x.rows()) {
    throw DomainError("gather_row: row " + std::to_string(r) + " outside " + x.shape_string());
  }
  return table.tape->push(Matrix::row_vector(x.row(r)), [a = table.id, r](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    auto row = tp.grad(a).row(r);
    for (std::size_t c = 0; c < g.size(); ++c) row[c] += g[c];
  });
}

Var slice_row(Var a, std::size_t r) { return gather_row(a, r); }

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& x = a.value();
  if (begin + count > x.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                     ") outside " + x.shape_string());
  }
  Matrix out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  return a.tape->push(std::move(out), [a = a.id, begin](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    Matrix& ga = tp.grad(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = *parts.front().tape;
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape != &t) throw Error("operands recorded on different tapes");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + p.value().shape_string());
    }
    cols += p.cols();
    ids.push_back(p.id);
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  return t.push(std::move(out), [ids = std::move(ids)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      Matrix& gp = tp.grad(id);
      for (std::size_t r = 0; r < gp.rows(); ++r)
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, off + c);
      off += gp.cols();
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no operands");
  Tape& t = *rows.front().tape;
  std::size_t total_rows = 0;
  const std::size_t cols = rows.front().cols();
  std::vector<std::size_t> ids;
  for (const Var& r : rows) {
    if (r.tape != &t) throw Error("operands recorded on different tapes");
    if (r.cols() != cols) throw ShapeError("stack_rows: column mismatch " + r.value().shape_string());
    total_rows += r.rows();
    ids.push_back(r.id);
  }
  Matrix out(total_rows, cols);
  std::size_t offset = 0;
  for (const Var& r : rows) {
    const Matrix& v = r.value();
    std::copy(v.values().begin(), v.values().end(), out.data() + offset);
    offset += v.size();
  }
  return t.push(std::move(out), [ids = std::move(ids)](Tape& tp, std::size_t self) {
    const Matrix& g = tp.incoming(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      Matrix& gp = tp.grad(id);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
}

}  // namespace sanmt
