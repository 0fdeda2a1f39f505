#pragma once

// Parameter blocks are templated on the leaf type: T = Matrix holds the
// stored weights, T = ad::Var holds the same weights bound onto a tape for one
// forward pass. visit() enumerates leaves in a fixed order, which is what ties
// a parameter to its gradient and to its optimizer moments.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mmdr/autodiff.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

template <class T>
struct AffineT {
  T weight;  // in x out
  T bias;    // 1 x out

  template <class F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
  template <class F>
  void visit(F&& f) const {
    f(weight);
    f(bias);
  }
};

/// affine -> tanh -> affine
template <class T>
struct TwoLayerT {
  AffineT<T> hidden;
  AffineT<T> output;

  template <class F>
  void visit(F&& f) {
    hidden.visit(f);
    output.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    hidden.visit(f);
    output.visit(f);
  }
};

using Affine = AffineT<Matrix>;
using TwoLayer = TwoLayerT<Matrix>;

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weight and bias.
inline Affine init_affine(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Affine p{Matrix(in, out), Matrix(1, out)};
  for (double& v : p.weight.values()) v = dist(rng);
  for (double& v : p.bias.values()) v = dist(rng);
  return p;
}

inline TwoLayer init_two_layer(std::size_t in, std::size_t hidden, std::size_t out,
                               std::mt19937_64& rng) {
  TwoLayer p;
  p.hidden = init_affine(in, hidden, rng);
  p.output = init_affine(hidden, out, rng);
  return p;
}

template <class P>
std::vector<Matrix*> leaves(P& params) {
  std::vector<Matrix*> out;
  params.visit([&out](Matrix& m) { out.push_back(&m); });
  return out;
}

template <class P>
std::vector<const Matrix*> leaves(const P& params) {
  std::vector<const Matrix*> out;
  params.visit([&out](const Matrix& m) { out.push_back(&m); });
  return out;
}

/// Binds every stored matrix of `params` onto the tape.
template <template <class> class P>
P<ad::Var> bind(ad::Tape& tape, const P<Matrix>& params, bool trainable = true) {
  P<ad::Var> out;
  const auto src = leaves(params);
  std::size_t i = 0;
  out.visit([&](ad::Var& v) {
    v = trainable ? tape.variable(*src[i]) : tape.constant(*src[i]);
    ++i;
  });
  return out;
}

/// Gradients of a bound parameter set, in visit order.
template <template <class> class P>
std::vector<Matrix> gradients(const P<ad::Var>& bound) {
  std::vector<Matrix> out;
  bound.visit([&out](const ad::Var& v) { out.push_back(v.grad()); });
  return out;
}

template <template <class> class P>
std::size_t parameter_count(const P<Matrix>& params) {
  std::size_t n = 0;
  params.visit([&n](const Matrix& m) { n += m.size(); });
  return n;
}

inline ad::Var affine(const ad::Var& x, const AffineT<ad::Var>& p) {
  return ad::add_row(ad::matmul(x, p.weight), p.bias);
}

inline ad::Var two_layer(const ad::Var& x, const TwoLayerT<ad::Var>& p) {
  return affine(ad::tanh(affine(x, p.hidden)), p.output);
}

inline std::size_t input_width(const TwoLayer& p) { return p.hidden.weight.rows(); }
inline std::size_t input_width(const TwoLayerT<ad::Var>& p) { return p.hidden.weight.rows(); }
inline std::size_t output_width(const TwoLayerT<ad::Var>& p) { return p.output.weight.cols(); }

}  // namespace mmdr
