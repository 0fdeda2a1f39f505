#pragma once

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A Tape owns every value produced during one forward pass. Ops append a node
// holding the result and a closure that pushes the upstream gradient back to
// the node's inputs. Nodes are created in topological order, so backward()
// walks them in reverse creation order and visits each exactly once.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdr/matrix.hpp"

namespace mmdr::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const {
    if (!tape_) throw std::logic_error("Var: not bound to a tape");
    return *tape_;
  }
  std::size_t id() const { return id_; }

  const Matrix& value() const;
  Matrix grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  /// Value of a 1x1 node.
  double scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1)
      throw std::invalid_argument("Var::scalar: node is " + v.shape_string());
    return v[0];
  }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }
  Var variable(Matrix value) { return push(std::move(value), true, nullptr); }

  /// Appends an op result. The closure is kept only if some input needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  Var record(Matrix value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (const Var& in : inputs) {
      if (&in.tape() != this) throw std::invalid_argument("Tape::record: input from another tape");
      needs = needs || nodes_[in.id()].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  /// Reverse sweep from a 1x1 root. Clears gradients from any earlier sweep.
  void backward(const Var& root) {
    if (root.value().size() != 1)
      throw std::invalid_argument("Tape::backward: root must be 1x1, got " +
                                  root.value().shape_string());
    for (Node& n : nodes_) n.grad = Matrix();
    Node& r = nodes_[root.id()];
    if (!r.requires_grad) return;
    r.grad = Matrix(1, 1, 1.0);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

  void accumulate(const Var& target, const Matrix& g) {
    Node& n = nodes_[target.id()];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
      require_same_shape(n.value, g, "Tape::accumulate");
      n.grad = g;
      return;
    }
    require_same_shape(n.grad, g, "Tape::accumulate");
    auto dst = n.grad.values();
    auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }

  /// Gradient of the last backward() root w.r.t. this node; zeros if not on any path.
  Matrix grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
    return Var(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape().value(id_); }
inline Matrix Var::grad() const { return tape().grad(id_); }
inline bool Var::requires_grad() const { return tape().requires_grad(id_); }

namespace detail {

inline void require_shape(const Var& v, std::size_t rows, std::size_t cols, const char* what) {
  if (v.rows() != rows || v.cols() != cols) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + v.value().shape_string());
  }
}

inline void require_scalar(const Var& v, const char* what) { require_shape(v, 1, 1, what); }

template <class F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

inline Matrix matmul_raw(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// a^T b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

// a b^T.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Plain-value kernels

/// Max-shifted softmax of one vector.
inline std::vector<double> softmax_row(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("softmax_row: empty vector");
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

inline double frobenius_norm_sq(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s;
}

inline std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

/// Per-column k-th central moment, k >= 2.
inline std::vector<double> central_moment(const Matrix& x, int k) {
  if (k < 2) throw std::invalid_argument("central_moment: order must be >= 2");
  if (x.rows() == 0) throw std::invalid_argument("central_moment: no rows");
  const auto mean = column_means(x);
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += std::pow(x(r, c) - mean[c], k);
  for (double& v : out) v /= static_cast<double>(x.rows());
  return out;
}

// ---------------------------------------------------------------------------
// Differentiable ops

inline Var detach(const Var& a) { return a.tape().constant(a.value()); }

inline Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

inline Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, detail::map(g, [](double v) { return -v; }));
  });
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    Matrix ga = g, gb = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] *= b.value()[i];
      gb[i] *= a.value()[i];
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

inline Var scale(const Var& a, double c) {
  return a.tape().record(detail::map(a.value(), [c](double v) { return c * v; }), {a},
                         [a, c](Tape& t, const Matrix& g) {
                           t.accumulate(a, detail::map(g, [c](double v) { return c * v; }));
                         });
}

inline Var add_scalar(const Var& a, double c) {
  return a.tape().record(detail::map(a.value(), [c](double v) { return v + c; }), {a},
                         [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

/// a (r x c) + row (1 x c), broadcast over rows.
inline Var add_row(const Var& a, const Var& row) {
  detail::require_shape(row, 1, a.cols(), "add_row");
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += row.value()[c];
  return a.tape().record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    Matrix gr(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    t.accumulate(row, gr);
  });
}

inline Var sub_row(const Var& a, const Var& row) { return add_row(a, scale(row, -1.0)); }

/// a (r x c) scaled row-wise by col (r x 1).
inline Var mul_col(const Var& a, const Var& col) {
  detail::require_shape(col, a.rows(), 1, "mul_col");
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= col.value()[r];
  return a.tape().record(std::move(out), {a, col}, [a, col](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), g.cols());
    Matrix gc(g.rows(), 1);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        ga(r, c) = g(r, c) * col.value()[r];
        gc[r] += g(r, c) * a.value()(r, c);
      }
    }
    t.accumulate(a, ga);
    t.accumulate(col, gc);
  });
}

/// a scaled by a 1x1 node.
inline Var mul_scalar(const Var& a, const Var& s) {
  detail::require_scalar(s, "mul_scalar");
  const double sv = s.scalar();
  return a.tape().record(detail::map(a.value(), [sv](double v) { return v * sv; }), {a, s},
                         [a, s](Tape& t, const Matrix& g) {
                           const double k = s.scalar();
                           t.accumulate(a, detail::map(g, [k](double v) { return v * k; }));
                           double gs = 0.0;
                           for (std::size_t i = 0; i < g.size(); ++i) gs += g[i] * a.value()[i];
                           t.accumulate(s, Matrix(1, 1, gs));
                         });
}

/// a divided by a 1x1 node.
inline Var div_scalar(const Var& a, const Var& s) {
  detail::require_scalar(s, "div_scalar");
  const double sv = s.scalar();
  return a.tape().record(detail::map(a.value(), [sv](double v) { return v / sv; }), {a, s},
                         [a, s](Tape& t, const Matrix& g) {
                           const double k = s.scalar();
                           t.accumulate(a, detail::map(g, [k](double v) { return v / k; }));
                           double gs = 0.0;
                           for (std::size_t i = 0; i < g.size(); ++i) gs += g[i] * a.value()[i];
                           t.accumulate(s, Matrix(1, 1, -gs / (k * k)));
                         });
}

/// Elementwise integer power.
inline Var powi(const Var& a, int k) {
  if (k < 1) throw std::invalid_argument("powi: exponent must be >= 1");
  return a.tape().record(detail::map(a.value(), [k](double v) { return std::pow(v, k); }), {a},
                         [a, k](Tape& t, const Matrix& g) {
                           Matrix ga(g.rows(), g.cols());
                           for (std::size_t i = 0; i < g.size(); ++i)
                             ga[i] = g[i] * k * std::pow(a.value()[i], k - 1);
                           t.accumulate(a, ga);
                         });
}

inline Var tanh(const Var& a) {
  Matrix out = detail::map(a.value(), [](double v) { return std::tanh(v); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = std::tanh(a.value()[i]);
      ga[i] = g[i] * (1.0 - y * y);
    }
    t.accumulate(a, ga);
  });
}

inline Var sigmoid(const Var& a) {
  auto sig = [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return a.tape().record(detail::map(a.value(), sig), {a}, [a, sig](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = sig(a.value()[i]);
      ga[i] = g[i] * y * (1.0 - y);
    }
    t.accumulate(a, ga);
  });
}

/// max(0, a) elementwise.
inline Var hinge(const Var& a) {
  return a.tape().record(detail::map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                         [a](Tape& t, const Matrix& g) {
                           Matrix ga(g.rows(), g.cols());
                           for (std::size_t i = 0; i < g.size(); ++i)
                             ga[i] = a.value()[i] > 0.0 ? g[i] : 0.0;
                           t.accumulate(a, ga);
                         });
}

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ, " + a.value().shape_string() +
                                " * " + b.value().shape_string());
  }
  return a.tape().record(detail::matmul_raw(a.value(), b.value()), {a, b},
                         [a, b](Tape& t, const Matrix& g) {
                           if (a.requires_grad()) t.accumulate(a, detail::matmul_nt(g, b.value()));
                           if (b.requires_grad()) t.accumulate(b, detail::matmul_tn(a.value(), g));
                         });
}

inline Var transpose(const Var& a) {
  return a.tape().record(a.value().transposed(), {a},
                         [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transposed()); });
}

/// Horizontal concatenation; all parts share the row count.
inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, offset + c) = p.value()(r, c);
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      if (p.requires_grad()) {
        Matrix gp(g.rows(), p.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < p.cols(); ++c) gp(r, c) = g(r, off + c);
        t.accumulate(p, gp);
      }
      off += p.cols();
    }
  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Columns [begin, begin + count).
inline Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw std::invalid_argument("slice_cols: range out of bounds");
  Matrix out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = a.value()(r, begin + c);
  return a.tape().record(std::move(out), {a}, [a, begin, count](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) = g(r, c);
    t.accumulate(a, ga);
  });
}

/// Column means, 1 x c.
inline Var mean_rows(const Var& a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: no rows");
  Matrix out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += a.value()(r, c);
  const double n = static_cast<double>(a.rows());
  for (std::size_t c = 0; c < a.cols(); ++c) out[c] /= n;
  return a.tape().record(std::move(out), {a}, [a, n](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) ga(r, c) = g[c] / n;
    t.accumulate(a, ga);
  });
}

/// Row sums, r x 1.
inline Var sum_cols(const Var& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out[r] += a.value()(r, c);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
      for (std::size_t c = 0; c < a.cols(); ++c) ga(r, c) = g[r];
    t.accumulate(a, ga);
  });
}

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape().record(Matrix(1, 1, s), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(a.rows(), a.cols(), g[0]));
  });
}

inline Var mean(const Var& a) {
  if (a.value().empty()) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

/// Sum of squared entries.
inline Var frobenius_norm_sq(const Var& a) {
  return a.tape().record(Matrix(1, 1, frobenius_norm_sq(a.value())), {a},
                         [a](Tape& t, const Matrix& g) {
                           const double k = 2.0 * g[0];
                           t.accumulate(a, detail::map(a.value(), [k](double v) { return k * v; }));
                         });
}

/// Euclidean norm of all entries; the gradient at the origin is taken as zero.
inline Var norm2(const Var& a) {
  const double n = std::sqrt(frobenius_norm_sq(a.value()));
  return a.tape().record(Matrix(1, 1, n), {a}, [a, n](Tape& t, const Matrix& g) {
    if (n == 0.0) return;
    const double k = g[0] / n;
    t.accumulate(a, detail::map(a.value(), [k](double v) { return k * v; }));
  });
}

namespace detail {

template <class Better>
Var extremum(const Var& a, Better better, const char* what) {
  if (a.value().empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.value().size(); ++i)
    if (better(a.value()[i], a.value()[best])) best = i;
  return a.tape().record(Matrix(1, 1, a.value()[best]), {a}, [a, best](Tape& t, const Matrix& g) {
    Matrix ga(a.rows(), a.cols());
    ga[best] = g[0];
    t.accumulate(a, ga);
  });
}

}  // namespace detail

/// Largest entry; gradient flows to the first maximizer.
inline Var max_all(const Var& a) {
  return detail::extremum(a, [](double x, double y) { return x > y; }, "max_all");
}

/// Smallest entry; gradient flows to the first minimizer.
inline Var min_all(const Var& a) {
  return detail::extremum(a, [](double x, double y) { return x < y; }, "min_all");
}

/// Row-wise softmax.
inline Var softmax_rows(const Var& a) {
  if (a.cols() == 0) throw std::invalid_argument("softmax_rows: empty rows");
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto p = softmax_row(a.value().row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  Matrix probs = out;
  return a.tape().record(std::move(out), {a}, [a, probs](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * probs(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = probs(r, c) * (g(r, c) - dot);
    }
    t.accumulate(a, ga);
  });
}

inline constexpr double kProbabilityFloor = 1e-7;

/// Mean binary cross-entropy of probabilities against fixed targets in [0, 1].
/// Probabilities are clamped to [1e-7, 1 - 1e-7]; clamped entries get no gradient.
inline Var bce_mean(const Var& prob, const Matrix& targets) {
  require_same_shape(prob.value(), targets, "bce_mean");
  if (targets.empty()) throw std::invalid_argument("bce_mean: empty input");
  constexpr double lo = kProbabilityFloor;
  constexpr double hi = 1.0 - kProbabilityFloor;
  const double n = static_cast<double>(targets.size());
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double p = std::clamp(prob.value()[i], lo, hi);
    total -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  return prob.tape().record(Matrix(1, 1, total / n), {prob},
                            [prob, targets, n](Tape& t, const Matrix& g) {
                              Matrix gp(targets.rows(), targets.cols());
                              for (std::size_t i = 0; i < targets.size(); ++i) {
                                const double p = prob.value()[i];
                                if (p < lo || p > hi) continue;
                                const double y = targets[i];
                                gp[i] = g[0] * (-(y / p) + (1.0 - y) / (1.0 - p)) / n;
                              }
                              t.accumulate(prob, gp);
                            });
}

/// Per-column k-th central moment as a 1 x c node.
inline Var central_moment(const Var& x, int k) {
  if (k < 2) throw std::invalid_argument("central_moment: order must be >= 2");
  return mean_rows(powi(sub_row(x, mean_rows(x)), k));
}

}  // namespace mmdr::ad
