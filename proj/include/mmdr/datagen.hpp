#pragma once

// Synthetic two-modality data with planted latent factors.
//
// Each sample draws a shared factor z_c, a specific factor z_s^m and a
// nuisance factor z_n^m per modality (all standard normal). Observed segment
// features are F^m_l = A_c^m (z_c + j) + A_s^m (z_s^m + j) + A_n^m (z_n^m + j)
// + noise, with per-segment latent jitter j (the jitter on z_c is shared by
// both modalities). The score is offset + w . [z_c; z_s^v; z_s^a], clipped
// to [0, 63]; nuisance factors never enter it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdr/dataset.hpp"
#include "mmdr/keyvalue.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

inline constexpr double kScoreMin = 0.0;
inline constexpr double kScoreMax = 63.0;

struct SyntheticSpec {
  std::size_t n_samples = 2000;
  std::size_t d_common = 4;
  std::size_t d_specific = 2;
  std::size_t d_nuisance = 4;
  std::size_t d_v = 32;
  std::size_t d_a = 32;
  std::size_t segments = 8;
  double noise_std = 0.1;
  double segment_jitter = 0.1;
  double label_offset = kAuxThreshold;
  std::uint64_t seed = 2024;
  std::vector<double> label_weights;  // d_common + 2 * d_specific; empty selects the default

  std::size_t observed(Modality m) const { return m == Modality::kVisual ? d_v : d_a; }
  std::size_t latent_total() const { return d_common + d_specific + d_nuisance; }

  /// 3 per common factor, 1.5 per specific factor unless overridden.
  std::vector<double> effective_label_weights() const {
    if (!label_weights.empty()) return label_weights;
    std::vector<double> w(d_common, 3.0);
    w.insert(w.end(), 2 * d_specific, 1.5);
    return w;
  }

  void validate() const {
    if (n_samples == 0) throw std::invalid_argument("SyntheticSpec: n_samples must be positive");
    if (segments == 0) throw std::invalid_argument("SyntheticSpec: segments must be positive");
    if (latent_total() == 0) throw std::invalid_argument("SyntheticSpec: no latent factors");
    for (Modality m : kModalities) {
      if (observed(m) < latent_total())
        throw std::invalid_argument("SyntheticSpec: observed width " +
                                    std::to_string(observed(m)) +
                                    " is smaller than the latent total " +
                                    std::to_string(latent_total()));
    }
    if (!(noise_std >= 0.0) || !(segment_jitter >= 0.0))
      throw std::invalid_argument("SyntheticSpec: noise and jitter must be non-negative");
    if (!label_weights.empty() && label_weights.size() != d_common + 2 * d_specific)
      throw std::invalid_argument("SyntheticSpec: label_weights must have d_common + 2*d_specific entries");
  }
};

inline SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec s;
  for (const KeyValue& kv : read_key_values(in)) {
    const auto count = [&] { return static_cast<std::size_t>(parse_uint(kv.value, kv.line)); };
    if (kv.key == "n_samples") s.n_samples = count();
    else if (kv.key == "d_common") s.d_common = count();
    else if (kv.key == "d_specific") s.d_specific = count();
    else if (kv.key == "d_nuisance") s.d_nuisance = count();
    else if (kv.key == "d_v") s.d_v = count();
    else if (kv.key == "d_a") s.d_a = count();
    else if (kv.key == "segments" || kv.key == "L") s.segments = count();
    else if (kv.key == "noise_std") s.noise_std = parse_double(kv.value, kv.line);
    else if (kv.key == "segment_jitter") s.segment_jitter = parse_double(kv.value, kv.line);
    else if (kv.key == "label_offset") s.label_offset = parse_double(kv.value, kv.line);
    else if (kv.key == "seed") s.seed = parse_uint(kv.value, kv.line);
    else if (kv.key == "label_weights") s.label_weights = parse_double_list(kv.value, kv.line);
    else throw ParseError("unknown key '" + kv.key + "'", kv.line);
  }
  s.validate();
  return s;
}

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),  static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// d_m x (d_c + d_s + d_n) with orthonormal columns, column k of each group scaled by 1/(1+k).
inline Matrix mixing_matrix(std::size_t observed, const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t total = spec.latent_total();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> cols(total, std::vector<double>(observed));
  for (auto& c : cols)
    for (double& v : c) v = normal(rng);
  // Modified Gram-Schmidt; observed >= total keeps this full rank with probability one.
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < observed; ++i) dot += cols[k][i] * cols[j][i];
      for (std::size_t i = 0; i < observed; ++i) cols[k][i] -= dot * cols[j][i];
    }
    double norm = 0.0;
    for (double v : cols[k]) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : cols[k]) v /= norm;
  }
  Matrix a(observed, total);
  const std::array<std::size_t, 3> groups = {spec.d_common, spec.d_specific, spec.d_nuisance};
  std::size_t k = 0;
  for (std::size_t g : groups) {
    for (std::size_t within = 0; within < g; ++within, ++k) {
      const double s = 1.0 / static_cast<double>(1 + within);
      for (std::size_t i = 0; i < observed; ++i) a(i, k) = s * cols[k][i];
    }
  }
  return a;
}

}  // namespace detail

inline Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples, dc = spec.d_common, ds = spec.d_specific,
                    dn = spec.d_nuisance, L = spec.segments;
  const auto weights = spec.effective_label_weights();

  std::array<Matrix, 2> mixing;
  for (Modality m : kModalities) {
    auto rng = detail::stream(spec.seed, 0xA11CEu, index_of(m));
    mixing[index_of(m)] = detail::mixing_matrix(spec.observed(m), spec, rng);
  }

  Dataset out;
  out.segments = L;
  Latents lat{Matrix(n, dc), {Matrix(n, ds), Matrix(n, ds)}, {Matrix(n, dn), Matrix(n, dn)}};
  for (Modality m : kModalities)
    out.segment_features[index_of(m)] = Matrix(n * L, spec.observed(m));
  out.labels.resize(n);

  std::vector<double> z(spec.latent_total());
  for (std::size_t i = 0; i < n; ++i) {
    // Fresh distribution per sample: libstdc++ caches a spare normal deviate.
    auto rng = detail::stream(spec.seed, 0x5A3Eu, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < dc; ++k) lat.common(i, k) = normal(rng);
    for (std::size_t mi = 0; mi < 2; ++mi) {
      for (std::size_t k = 0; k < ds; ++k) lat.specific[mi](i, k) = normal(rng);
      for (std::size_t k = 0; k < dn; ++k) lat.nuisance[mi](i, k) = normal(rng);
    }

    for (std::size_t l = 0; l < L; ++l) {
      std::vector<double> common_jitter(dc);
      for (double& j : common_jitter) j = spec.segment_jitter * normal(rng);
      for (std::size_t mi = 0; mi < 2; ++mi) {
        std::size_t k = 0;
        for (std::size_t c = 0; c < dc; ++c, ++k) z[k] = lat.common(i, c) + common_jitter[c];
        for (std::size_t c = 0; c < ds; ++c, ++k)
          z[k] = lat.specific[mi](i, c) + spec.segment_jitter * normal(rng);
        for (std::size_t c = 0; c < dn; ++c, ++k)
          z[k] = lat.nuisance[mi](i, c) + spec.segment_jitter * normal(rng);
        const Matrix& a = mixing[mi];
        auto row = out.segment_features[mi].row(i * L + l);
        for (std::size_t r = 0; r < a.rows(); ++r) {
          double v = 0.0;
          for (std::size_t c = 0; c < a.cols(); ++c) v += a(r, c) * z[c];
          row[r] = v + spec.noise_std * normal(rng);
        }
      }
    }

    double score = spec.label_offset;
    std::size_t w = 0;
    for (std::size_t c = 0; c < dc; ++c) score += weights[w++] * lat.common(i, c);
    for (std::size_t mi = 0; mi < 2; ++mi)
      for (std::size_t c = 0; c < ds; ++c) score += weights[w++] * lat.specific[mi](i, c);
    score = std::clamp(score, kScoreMin, kScoreMax);
    out.labels[i] = SampleLabels{score, derive_aux_label(score)};
  }

  for (std::size_t mi = 0; mi < 2; ++mi) out.pooled[mi] = pool_segments(out.segment_features[mi], L);
  out.latents = std::move(lat);
  return out;
}

}  // namespace mmdr
