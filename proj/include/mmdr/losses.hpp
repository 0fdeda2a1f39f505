#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "mmdr/autodiff.hpp"
#include "mmdr/drd.hpp"
#include "mmdr/iaf.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

struct CmdConfig {
  int max_order = 5;
  double range_floor = 1e-12;

  void validate() const {
    if (max_order < 2) throw std::invalid_argument("CmdConfig: max_order must be >= 2");
    if (!(range_floor > 0.0)) throw std::invalid_argument("CmdConfig: range_floor must be positive");
  }
};

inline constexpr double kDefaultAlpha = 0.7;
inline constexpr double kDefaultBeta = 0.5;
inline constexpr double kDefaultMargin = 0.05;

/// Scalar values of every objective term and their weighted total.
struct LossBreakdown {
  double task = 0.0;
  double untask = 0.0;
  double orth = 0.0;
  double cmd = 0.0;
  double recon = 0.0;
  double align = 0.0;
  double contri = 0.0;
  double total = 0.0;

  double reassemble(double alpha, double beta) const {
    return (task + untask) + alpha * (orth + cmd + recon) + beta * (align + contri);
  }

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

inline LossBreakdown total_loss(LossBreakdown parts, double alpha = kDefaultAlpha,
                                double beta = kDefaultBeta) {
  parts.total = parts.reassemble(alpha, beta);
  return parts;
}

/*!
 * \brief Central moment discrepancy between two batches.
 *
 * Mean difference plus central moments 2..K, each divided by the matching
 * power of the joint value range of both batches. The range is clamped below
 * by cfg.range_floor (a constant batch has no gradient through it).
 */
inline ad::Var cmd_loss(const ad::Var& x, const ad::Var& y, const CmdConfig& cfg = {}) {
  cfg.validate();
  require_same_shape(x.value(), y.value(), "cmd_loss");
  if (x.rows() < 2) throw std::invalid_argument("cmd_loss: need at least 2 rows");

  const ad::Var x_max = ad::max_all(x), y_max = ad::max_all(y);
  const ad::Var x_min = ad::min_all(x), y_min = ad::min_all(y);
  const ad::Var hi = x_max.scalar() >= y_max.scalar() ? x_max : y_max;
  const ad::Var lo = x_min.scalar() <= y_min.scalar() ? x_min : y_min;
  ad::Var span = ad::sub(hi, lo);
  if (span.scalar() < cfg.range_floor) span = x.tape().constant(Matrix(1, 1, cfg.range_floor));

  const ad::Var x_mean = ad::mean_rows(x);
  const ad::Var y_mean = ad::mean_rows(y);
  ad::Var loss = ad::div_scalar(ad::norm2(ad::sub(x_mean, y_mean)), span);

  const ad::Var x_centered = ad::sub_row(x, x_mean);
  const ad::Var y_centered = ad::sub_row(y, y_mean);
  for (int k = 2; k <= cfg.max_order; ++k) {
    const ad::Var diff =
        ad::sub(ad::mean_rows(ad::powi(x_centered, k)), ad::mean_rows(ad::powi(y_centered, k)));
    loss = ad::add(loss, ad::div_scalar(ad::norm2(diff), ad::powi(span, k)));
  }
  return loss;
}

/// Sum over both modalities of ||F_c^T F_s||^2 + ||F_c^T N_c||^2 + ||F_s^T N_s||^2.
inline ad::Var orthogonality_loss(const DisentangledBundle& v, const DisentangledBundle& a) {
  auto gram_sq = [](const ad::Var& p, const ad::Var& q) {
    require_same_shape(p.value(), q.value(), "orthogonality_loss");
    return ad::frobenius_norm_sq(ad::matmul(ad::transpose(p), q));
  };
  ad::Var total;
  for (const DisentangledBundle* b : {&v, &a}) {
    require_same_shape(b->common.value(), v.common.value(), "orthogonality_loss");
    const ad::Var term = ad::add(ad::add(gram_sq(b->common, b->specific),
                                         gram_sq(b->common, b->common_unrelated)),
                                 gram_sq(b->specific, b->specific_unrelated));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return total;
}

/// (1/|C|) * sum over modalities of ||F - F_self||^2 + ||F - F_cross||^2.
inline ad::Var reconstruction_loss(const std::array<ad::Var, 2>& originals,
                                   const std::array<ad::Var, 2>& recon_self,
                                   const std::array<ad::Var, 2>& recon_cross) {
  ad::Var total;
  for (std::size_t m = 0; m < 2; ++m) {
    require_same_shape(originals[m].value(), recon_self[m].value(), "reconstruction_loss");
    require_same_shape(originals[m].value(), recon_cross[m].value(), "reconstruction_loss");
    const ad::Var term = ad::add(ad::frobenius_norm_sq(ad::sub(originals[m], recon_self[m])),
                                 ad::frobenius_norm_sq(ad::sub(originals[m], recon_cross[m])));
    total = m == 0 ? term : ad::add(total, term);
  }
  return ad::scale(total, 0.5);
}

/// Mean squared error.
inline ad::Var task_loss(const ad::Var& pred, const Matrix& target) {
  if (pred.value().size() != target.size() || target.empty())
    throw std::invalid_argument("task_loss: prediction and target lengths differ");
  const ad::Var t = pred.tape().constant(Matrix(pred.rows(), pred.cols(),
                                                std::vector<double>(target.values().begin(),
                                                                    target.values().end())));
  return ad::mean(ad::powi(ad::sub(pred, t), 2));
}

inline void require_binary(const Matrix& labels, const char* what) {
  for (double v : labels.values()) {
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument(std::string(what) + ": label " + std::to_string(v) +
                                  " is not 0 or 1");
  }
}

/// BCE against the reversed labels 1 - y_aux.
inline ad::Var untask_loss(const ad::Var& prob, const Matrix& y_aux) {
  require_binary(y_aux, "untask_loss");
  Matrix reversed(prob.rows(), prob.cols());
  if (reversed.size() != y_aux.size()) throw std::invalid_argument("untask_loss: length mismatch");
  for (std::size_t i = 0; i < y_aux.size(); ++i) reversed[i] = 1.0 - y_aux[i];
  return ad::bce_mean(prob, reversed);
}

struct ContributionTerms {
  ad::Var total;
  std::array<ad::Var, kStacked> per_feature;  // l_u^m in stack order

  std::array<double, kStacked> per_feature_values() const {
    std::array<double, kStacked> out{};
    for (std::size_t e = 0; e < kStacked; ++e) out[e] = per_feature[e].scalar();
    return out;
  }
};

/// Per-feature BCE against y_aux (not reversed), summed.
inline ContributionTerms contribution_loss(const std::array<ad::Var, kStacked>& head_probs,
                                           const Matrix& y_aux) {
  require_binary(y_aux, "contribution_loss");
  ContributionTerms out;
  for (std::size_t e = 0; e < kStacked; ++e) {
    if (head_probs[e].value().size() != y_aux.size())
      throw std::invalid_argument("contribution_loss: length mismatch");
    const Matrix target(head_probs[e].rows(), head_probs[e].cols(),
                        std::vector<double>(y_aux.values().begin(), y_aux.values().end()));
    out.per_feature[e] = ad::bce_mean(head_probs[e], target);
    out.total = e == 0 ? out.per_feature[e] : ad::add(out.total, out.per_feature[e]);
  }
  return out;
}

/*!
 * \brief Pairwise margin ranking between attention weights and per-feature losses.
 *
 * For every ordered pair (A, B) of distinct stacked features the sign is +1
 * when loss[A] < loss[B] and -1 otherwise, and the term is
 * max(0, sign * (W_B - W_A + margin)). The 12 terms are scaled by 1/(3|C|) with
 * |C| = 2. `weights` is B x 4; the result is the mean over rows. The losses are
 * plain numbers, so no gradient reaches whatever produced them.
 */
inline ad::Var alignment_loss(const ad::Var& weights, const std::array<double, kStacked>& losses,
                              double margin = kDefaultMargin) {
  if (weights.cols() != kStacked)
    throw std::invalid_argument("alignment_loss: expected " + std::to_string(kStacked) +
                                " attention weights, got " + std::to_string(weights.cols()));
  if (!(margin > 0.0)) throw std::invalid_argument("alignment_loss: margin must be positive");
  for (double l : losses)
    if (!std::isfinite(l)) throw std::invalid_argument("alignment_loss: non-finite loss value");

  std::array<ad::Var, kStacked> cols;
  for (std::size_t e = 0; e < kStacked; ++e) cols[e] = ad::slice_cols(weights, e, 1);

  ad::Var total;
  for (std::size_t a = 0; a < kStacked; ++a) {
    for (std::size_t b = 0; b < kStacked; ++b) {
      if (a == b) continue;
      const double sign = losses[a] < losses[b] ? 1.0 : -1.0;
      const ad::Var term =
          ad::hinge(ad::scale(ad::add_scalar(ad::sub(cols[b], cols[a]), margin), sign));
      total = total.valid() ? ad::add(total, term) : term;
    }
  }
  constexpr double kModalityCount = 2.0;
  return ad::scale(ad::mean_rows(total), 1.0 / (3.0 * kModalityCount));
}

}  // namespace mmdr
