#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "mmdr/autodiff.hpp"

namespace mmdr::ad {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a scalar loss on a fresh tape from the given input node.
using ScalarFn = std::function<Var(Tape&, const Var&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/*!
 * \brief Compares the reverse-mode gradient of f at x against central finite
 *        differences, coordinate by coordinate.
 *
 * Relative error per coordinate is |a - n| / max(1e-8, |a| + |n|).
 */
inline GradCheckResult grad_check_detailed(const ScalarFn& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  auto eval = [&f](const Matrix& at) {
    Tape tape;
    const double v = f(tape, tape.constant(at)).scalar();
    if (!std::isfinite(v)) throw EvaluationError("grad_check: non-finite function value");
    return v;
  };

  Matrix analytic;
  {
    Tape tape;
    Var in = tape.variable(x);
    Var out = f(tape, in);
    if (!std::isfinite(out.scalar()))
      throw EvaluationError("grad_check: non-finite function value");
    tape.backward(out);
    analytic = in.grad();
  }

  GradCheckResult result;
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = eval(probe);
    probe[i] = orig - h;
    const double down = eval(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    if (i == 0 || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
      result.analytic = a;
      result.numeric = numeric;
    }
  }
  return result;
}

inline double grad_check(const ScalarFn& f, const Matrix& x, double h) {
  return grad_check_detailed(f, x, h).max_relative_error;
}

}  // namespace mmdr::ad
