#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmdr/matrix.hpp"

namespace mmdr {

struct ProbeSettings {
  std::size_t iterations = 1500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/*!
 * \brief Logistic-regression probe: fitted by full-batch gradient descent on
 *        standardized training features, scored on held-out features.
 *
 * Measures how much linearly decodable label information a representation holds.
 */
inline ProbeResult logistic_probe(const Matrix& train_x, std::span<const int> train_y,
                                  const Matrix& test_x, std::span<const int> test_y,
                                  const ProbeSettings& s = {}) {
  if (train_x.rows() != train_y.size() || test_x.rows() != test_y.size() || train_x.rows() == 0 ||
      test_x.cols() != train_x.cols())
    throw std::invalid_argument("logistic_probe: inconsistent shapes");
  const std::size_t n = train_x.rows(), d = train_x.cols();

  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += train_x(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) scale[c] += std::pow(train_x(r, c) - mean[c], 2);
  for (double& v : scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }
  auto standardize = [&](const Matrix& x) {
    Matrix z(x.rows(), d);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) z(r, c) = (x(r, c) - mean[c]) / scale[c];
    return z;
  };
  const Matrix zt = standardize(train_x);
  const Matrix zs = standardize(test_x);

  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0;
  auto logit = [&](const Matrix& z, std::size_t r) {
    double v = b;
    for (std::size_t c = 0; c < d; ++c) v += w[c] * z(r, c);
    return v;
  };
  for (std::size_t it = 0; it < s.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double p = 1.0 / (1.0 + std::exp(-logit(zt, r)));
      const double e = p - train_y[r];
      for (std::size_t c = 0; c < d; ++c) grad[c] += e * zt(r, c);
      gb += e;
    }
    for (std::size_t c = 0; c < d; ++c)
      w[c] -= s.learning_rate * (grad[c] / static_cast<double>(n) + s.l2 * w[c]);
    b -= s.learning_rate * gb / static_cast<double>(n);
  }

  auto accuracy = [&](const Matrix& z, std::span<const int> y) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < z.rows(); ++r)
      if ((logit(z, r) >= 0.0 ? 1 : 0) == y[r]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(z.rows());
  };
  return ProbeResult{accuracy(zt, train_y), accuracy(zs, test_y)};
}

}  // namespace mmdr
