#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace mmdr {

struct MetricsReport {
  std::size_t count = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> accuracy;  // classification mode only
  std::optional<double> macro_f1;
};

inline MetricsReport regression_metrics(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("regression_metrics: length mismatch");
  if (pred.empty()) throw std::invalid_argument("regression_metrics: empty input");
  MetricsReport r;
  r.count = pred.size();
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = target[i] - pred[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const double n = static_cast<double>(pred.size());
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  return r;
}

/// Accuracy and macro-F1 of `prob >= 0.5` against binary labels.
inline void add_classification_metrics(MetricsReport& r, std::span<const double> prob,
                                       std::span<const double> labels) {
  if (prob.size() != labels.size() || prob.empty())
    throw std::invalid_argument("add_classification_metrics: bad lengths");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const bool predicted = prob[i] >= 0.5;
    const bool actual = labels[i] >= 0.5;
    if (predicted && actual) ++tp;
    else if (!predicted && !actual) ++tn;
    else if (predicted) ++fp;
    else ++fn;
  }
  auto f1 = [](double hit, double false_pos, double false_neg) {
    const double denom = 2 * hit + false_pos + false_neg;
    return denom > 0 ? 2 * hit / denom : 0.0;
  };
  r.accuracy = (tp + tn) / static_cast<double>(prob.size());
  r.macro_f1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
}

}  // namespace mmdr
