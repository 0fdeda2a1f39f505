#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmdr/matrix.hpp"

namespace mmdr {

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments per parameter, plus the number of steps taken.
struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

template <class Params>
AdamState make_adam_state(const std::vector<Params*>& params) {
  AdamState s;
  for (const auto* p : params) {
    s.first.emplace_back(p->rows(), p->cols());
    s.second.emplace_back(p->rows(), p->cols());
  }
  return s;
}

/// Bias-corrected Adam update of one tensor at step t (t >= 1).
inline void adam_update(Matrix& param, const Matrix& grad, Matrix& first, Matrix& second,
                        const AdamSettings& s, std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("adam_update: step must be >= 1");
  require_same_shape(param, grad, "adam_update");
  require_same_shape(param, first, "adam_update");
  require_same_shape(param, second, "adam_update");
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    first[i] = s.beta1 * first[i] + (1.0 - s.beta1) * g;
    second[i] = s.beta2 * second[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = first[i] / c1;
    const double v_hat = second[i] / c2;
    param[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

/// One step over every parameter; increments state.step first.
inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                      AdamState& state, const AdamSettings& s) {
  if (params.size() != grads.size() || params.size() != state.first.size() ||
      params.size() != state.second.size())
    throw std::invalid_argument("adam_step: parameter, gradient and moment counts differ");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_update(*params[i], grads[i], state.first[i], state.second[i], s, state.step);
}

}  // namespace mmdr
