#pragma once

// Segment-level cross-modal dependence: per segment, each modality is reduced
// to its first principal coordinate, both are binned into equal-width cells,
// and the plug-in mutual information (nats) of the joint histogram is reported.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmdr/dataset.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

/// Projection of the centered rows onto the leading covariance eigenvector.
/// The eigenvector sign is fixed so its largest-magnitude entry is positive.
inline std::vector<double> first_principal_coordinate(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("first_principal_coordinate: empty input");
  Eigen::MatrixXd data(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) data(r, c) = x(r, c);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  const Eigen::MatrixXd cov = data.transpose() * data / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Eigen::VectorXd top = solver.eigenvectors().col(x.cols() - 1);
  Eigen::Index pivot = 0;
  top.cwiseAbs().maxCoeff(&pivot);
  if (top(pivot) < 0) top = -top;
  const Eigen::VectorXd proj = data * top;
  return std::vector<double>(proj.data(), proj.data() + proj.size());
}

/// Equal-width bin index per value; an empty vector when the values are constant.
inline std::vector<std::size_t> equal_width_bins(std::span<const double> v, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("equal_width_bins: need at least 2 bins");
  if (v.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return {};
  std::vector<std::size_t> out(v.size());
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto b = static_cast<std::size_t>((v[i] - lo) / width);
    out[i] = std::min(b, bins - 1);
  }
  return out;
}

/// Plug-in entropy (nats) of the equal-width histogram.
inline double histogram_entropy(std::span<const double> v, std::size_t bins) {
  const auto idx = equal_width_bins(v, bins);
  if (idx.empty()) return 0.0;
  std::vector<double> counts(bins, 0.0);
  for (std::size_t b : idx) counts[b] += 1.0;
  const double n = static_cast<double>(idx.size());
  double h = 0.0;
  for (double c : counts)
    if (c > 0) h -= (c / n) * std::log(c / n);
  return h;
}

/// Plug-in mutual information (nats) of two paired scalar series. Constant input gives 0.
inline double plugin_mutual_information(std::span<const double> x, std::span<const double> y,
                                        std::size_t bins) {
  if (x.size() != y.size()) throw std::invalid_argument("plugin_mutual_information: length mismatch");
  const auto bx = equal_width_bins(x, bins);
  const auto by = equal_width_bins(y, bins);
  if (bx.empty() || by.empty()) return 0.0;
  std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
  for (std::size_t i = 0; i < bx.size(); ++i) {
    joint[bx[i] * bins + by[i]] += 1.0;
    px[bx[i]] += 1.0;
    py[by[i]] += 1.0;
  }
  const double n = static_cast<double>(bx.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double c = joint[i * bins + j];
      if (c == 0.0) continue;
      mi += (c / n) * std::log(c * n / (px[i] * py[j]));
    }
  }
  return std::max(mi, 0.0);
}

/// MI between two modalities' features for one segment (rows are samples).
inline double segment_pair_mi(const Matrix& f_v, const Matrix& f_a, std::size_t bins) {
  if (f_v.rows() != f_a.rows()) throw std::invalid_argument("segment_pair_mi: sample counts differ");
  return plugin_mutual_information(first_principal_coordinate(f_v), first_principal_coordinate(f_a),
                                   bins);
}

/// Per-segment MI scores, one per segment. The two datasets supply v and a respectively.
inline std::vector<double> segment_mi(const Dataset& visual_source, const Dataset& acoustic_source,
                                      std::size_t bins) {
  if (visual_source.segments != acoustic_source.segments)
    throw std::invalid_argument("segment_mi: segment counts differ");
  std::vector<double> out(visual_source.segments);
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l] = segment_pair_mi(visual_source.segment(Modality::kVisual, l),
                             acoustic_source.segment(Modality::kAcoustic, l), bins);
  }
  return out;
}

inline std::vector<double> segment_mi(const Dataset& data, std::size_t bins) {
  return segment_mi(data, data, bins);
}

}  // namespace mmdr
