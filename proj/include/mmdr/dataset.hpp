#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmdr/drd.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

inline constexpr double kAuxThreshold = 14.0;

/// 1 when the score reaches the mild-symptom threshold of 14.
inline int derive_aux_label(double y_reg) { return y_reg >= kAuxThreshold ? 1 : 0; }

struct SampleLabels {
  double y_reg = 0.0;
  int y_aux = 0;
};

/// Ground-truth latent factors, kept for generated data only.
struct Latents {
  Matrix common;                   // N x d_common
  std::array<Matrix, 2> specific;  // N x d_specific per modality
  std::array<Matrix, 2> nuisance;  // N x d_nuisance per modality
};

/*!
 * \brief Two-modality samples with per-segment features.
 *
 * segment_features[m] is (N*L) x d_m, sample-major then segment-major.
 * pooled[m] is the per-sample mean over segments.
 */
struct Dataset {
  std::size_t segments = 1;
  std::array<Matrix, 2> segment_features;
  std::array<Matrix, 2> pooled;
  std::vector<SampleLabels> labels;
  std::optional<Latents> latents;

  std::size_t size() const { return labels.size(); }
  std::size_t width(Modality m) const { return pooled[index_of(m)].cols(); }

  FeatureBatch feature_batch(Modality m) const { return FeatureBatch{m, pooled[index_of(m)], segments}; }

  /// N x d_m features of one segment.
  Matrix segment(Modality m, std::size_t l) const {
    const Matrix& src = segment_features[index_of(m)];
    Matrix out(size(), src.cols());
    for (std::size_t n = 0; n < size(); ++n) {
      const auto row = src.row(n * segments + l);
      std::copy(row.begin(), row.end(), out.row(n).begin());
    }
    return out;
  }

  Matrix y_reg() const {
    Matrix out(size(), 1);
    for (std::size_t i = 0; i < size(); ++i) out[i] = labels[i].y_reg;
    return out;
  }

  Matrix y_aux() const {
    Matrix out(size(), 1);
    for (std::size_t i = 0; i < size(); ++i) out[i] = labels[i].y_aux;
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.segments = segments;
    for (std::size_t m = 0; m < 2; ++m) {
      out.pooled[m] = pooled[m].gather_rows(indices);
      std::vector<std::size_t> seg_rows;
      seg_rows.reserve(indices.size() * segments);
      for (std::size_t i : indices)
        for (std::size_t l = 0; l < segments; ++l) seg_rows.push_back(i * segments + l);
      out.segment_features[m] = segment_features[m].gather_rows(seg_rows);
    }
    for (std::size_t i : indices) out.labels.push_back(labels.at(i));
    if (latents) {
      Latents l;
      l.common = latents->common.gather_rows(indices);
      for (std::size_t m = 0; m < 2; ++m) {
        l.specific[m] = latents->specific[m].gather_rows(indices);
        l.nuisance[m] = latents->nuisance[m].gather_rows(indices);
      }
      out.latents = std::move(l);
    }
    return out;
  }

  void validate() const {
    if (segments == 0) throw std::invalid_argument("Dataset: zero segments");
    for (std::size_t m = 0; m < 2; ++m) {
      if (pooled[m].rows() != size() || segment_features[m].rows() != size() * segments)
        throw std::invalid_argument("Dataset: row counts disagree with label count");
      if (pooled[m].cols() == 0) throw std::invalid_argument("Dataset: zero feature width");
    }
    for (const auto& l : labels)
      if (l.y_aux != 0 && l.y_aux != 1) throw std::invalid_argument("Dataset: non-binary y_aux");
  }
};

/// Mean over consecutive groups of `segments` rows.
inline Matrix pool_segments(const Matrix& segment_rows, std::size_t segments) {
  if (segments == 0 || segment_rows.rows() % segments != 0)
    throw std::invalid_argument("pool_segments: row count is not a multiple of the segment count");
  const std::size_t n = segment_rows.rows() / segments;
  Matrix out(n, segment_rows.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    for (std::size_t l = 0; l < segments; ++l) {
      const auto src = segment_rows.row(i * segments + l);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
    for (double& v : dst) v /= static_cast<double>(segments);
  }
  return out;
}

}  // namespace mmdr
