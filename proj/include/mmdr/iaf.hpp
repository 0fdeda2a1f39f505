#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string_view>

#include "mmdr/autodiff.hpp"
#include "mmdr/drd.hpp"
#include "mmdr/layers.hpp"

namespace mmdr {

/// Number of stacked related features per sample.
inline constexpr std::size_t kStacked = 4;

/// Stack order used everywhere: F_c^v, F_c^a, F_s^v, F_s^a.
inline constexpr std::array<std::string_view, kStacked> kStackNames = {"Fc_v", "Fc_a", "Fs_v",
                                                                       "Fs_a"};

using Stack = std::array<ad::Var, kStacked>;

inline Stack stack_related(const DisentangledBundle& v, const DisentangledBundle& a) {
  return {v.common, a.common, v.specific, a.specific};
}

inline Stack stack_unrelated(const DisentangledBundle& v, const DisentangledBundle& a) {
  return {v.common_unrelated, a.common_unrelated, v.specific_unrelated, a.specific_unrelated};
}

template <class T>
struct IafParamsT {
  T query;  // d x d
  T key;
  T value;

  template <class F>
  void visit(F&& f) {
    f(query);
    f(key);
    f(value);
  }
  template <class F>
  void visit(F&& f) const {
    f(query);
    f(key);
    f(value);
  }
};

using IafParams = IafParamsT<Matrix>;

inline IafParams init_iaf(std::size_t latent, std::mt19937_64& rng) {
  auto square = [&] { return init_affine(latent, latent, rng).weight; };
  IafParams p;
  p.query = square();
  p.key = square();
  p.value = square();
  return p;
}

struct FusionResult {
  ad::Var fused;    // F_S, B x d
  ad::Var weights;  // W_attn, B x 4
  Stack projected_values;
};

/*!
 * \brief Individual-aware attention over the four stacked features.
 *
 * Per sample: Q, K, V are the stacked rows projected by the three matrices, the
 * query is the mean of the four Q rows, the weights are
 * softmax(q K^T / sqrt(d)) and the fused vector is weights * V. The batch is
 * handled as four B x d blocks so each sample stays independent.
 */
inline FusionResult fuse(const Stack& stacked, const IafParamsT<ad::Var>& params) {
  const std::size_t d = params.query.rows();
  const std::size_t batch = stacked[0].rows();
  for (const ad::Var& s : stacked) {
    if (s.cols() != d || s.rows() != batch)
      throw std::invalid_argument("fuse: stacked features must all be B x d with d matching the projections");
  }
  for (const ad::Var* w : {&params.query, &params.key, &params.value}) {
    if (w->rows() != d || w->cols() != d) throw std::invalid_argument("fuse: projections must be d x d");
  }

  ad::Var query_sum;
  Stack keys, values;
  for (std::size_t e = 0; e < kStacked; ++e) {
    const ad::Var q = ad::matmul(stacked[e], params.query);
    query_sum = e == 0 ? q : ad::add(query_sum, q);
    keys[e] = ad::matmul(stacked[e], params.key);
    values[e] = ad::matmul(stacked[e], params.value);
  }
  const ad::Var individual = ad::scale(query_sum, 1.0 / static_cast<double>(kStacked));

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::array<ad::Var, kStacked> logits;
  for (std::size_t e = 0; e < kStacked; ++e)
    logits[e] = ad::scale(ad::sum_cols(ad::mul(individual, keys[e])), inv_sqrt_d);
  const ad::Var weights = ad::softmax_rows(ad::concat_cols(logits));

  ad::Var fused;
  for (std::size_t e = 0; e < kStacked; ++e) {
    const ad::Var term = ad::mul_col(values[e], ad::slice_cols(weights, e, 1));
    fused = e == 0 ? term : ad::add(fused, term);
  }
  return FusionResult{fused, weights, values};
}

inline FusionResult fuse(const DisentangledBundle& v, const DisentangledBundle& a,
                         const IafParamsT<ad::Var>& params) {
  return fuse(stack_related(v, a), params);
}

}  // namespace mmdr
