#pragma once

// Per-modality disentanglement: a common and a specific encoder each emit a
// (label-related, label-unrelated) pair of latent features, and a decoder
// rebuilds the input from all four, optionally with the other modality's
// common feature swapped in.

#include <array>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>

#include "mmdr/autodiff.hpp"
#include "mmdr/layers.hpp"
#include "mmdr/matrix.hpp"

namespace mmdr {

enum class Modality : int { kVisual = 0, kAcoustic = 1 };

inline constexpr std::array<Modality, 2> kModalities = {Modality::kVisual, Modality::kAcoustic};

inline constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }
inline constexpr Modality other(Modality m) {
  return m == Modality::kVisual ? Modality::kAcoustic : Modality::kVisual;
}

inline char modality_tag(Modality m) { return m == Modality::kVisual ? 'v' : 'a'; }

inline Modality parse_modality(const std::string& tag) {
  if (tag == "v") return Modality::kVisual;
  if (tag == "a") return Modality::kAcoustic;
  throw std::invalid_argument("unknown modality tag '" + tag + "'");
}

/// Pooled per-sample features of one modality, B x d_m.
struct FeatureBatch {
  Modality modality = Modality::kVisual;
  Matrix features;
  std::size_t segments = 1;

  void validate() const {
    if (features.cols() == 0) throw std::invalid_argument("FeatureBatch: zero feature width");
    if (segments == 0) throw std::invalid_argument("FeatureBatch: zero segments");
    if (!features.all_finite()) throw std::invalid_argument("FeatureBatch: non-finite values");
  }
};

/// The four latent features of one modality, each B x d.
struct DisentangledBundle {
  ad::Var common;              // F_c
  ad::Var specific;            // F_s
  ad::Var common_unrelated;    // N_c
  ad::Var specific_unrelated;  // N_s

  std::size_t latent() const { return common.cols(); }
};

template <class T>
struct ModalityParamsT {
  TwoLayerT<T> common_encoder;
  TwoLayerT<T> specific_encoder;
  TwoLayerT<T> decoder;

  template <class F>
  void visit(F&& f) {
    common_encoder.visit(f);
    specific_encoder.visit(f);
    decoder.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    common_encoder.visit(f);
    specific_encoder.visit(f);
    decoder.visit(f);
  }
};

template <class T>
struct DrdParamsT {
  std::array<ModalityParamsT<T>, 2> modality;

  ModalityParamsT<T>& operator[](Modality m) { return modality[index_of(m)]; }
  const ModalityParamsT<T>& operator[](Modality m) const { return modality[index_of(m)]; }

  template <class F>
  void visit(F&& f) {
    for (auto& p : modality) p.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    for (const auto& p : modality) p.visit(f);
  }
};

using ModalityParams = ModalityParamsT<Matrix>;
using DrdParams = DrdParamsT<Matrix>;

struct DrdDims {
  std::array<std::size_t, 2> input{};  // d_v, d_a
  std::size_t latent = 8;
  std::size_t hidden = 16;

  std::size_t input_of(Modality m) const { return input[index_of(m)]; }
};

inline DrdParams init_drd(const DrdDims& dims, std::mt19937_64& rng) {
  if (dims.latent == 0 || dims.hidden == 0)
    throw std::invalid_argument("init_drd: latent and hidden widths must be positive");
  DrdParams p;
  for (Modality m : kModalities) {
    const std::size_t in = dims.input_of(m);
    if (in == 0) throw std::invalid_argument("init_drd: zero input width");
    auto& mp = p[m];
    mp.common_encoder = init_two_layer(in, dims.hidden, 2 * dims.latent, rng);
    mp.specific_encoder = init_two_layer(in, dims.hidden, 2 * dims.latent, rng);
    mp.decoder = init_two_layer(4 * dims.latent, dims.hidden, in, rng);
  }
  return p;
}

/// Encoders are tanh(two_layer(x)); the 2d output splits into (related, unrelated).
inline DisentangledBundle encode(const ad::Var& features, const ModalityParamsT<ad::Var>& params) {
  const std::size_t expected = input_width(params.common_encoder);
  if (features.cols() != expected) {
    throw std::invalid_argument("encode: feature width " + std::to_string(features.cols()) +
                                " does not match encoder input " + std::to_string(expected));
  }
  const std::size_t d = output_width(params.common_encoder) / 2;
  const ad::Var common = ad::tanh(two_layer(features, params.common_encoder));
  const ad::Var specific = ad::tanh(two_layer(features, params.specific_encoder));
  return DisentangledBundle{ad::slice_cols(common, 0, d), ad::slice_cols(specific, 0, d),
                            ad::slice_cols(common, d, d), ad::slice_cols(specific, d, d)};
}

inline DisentangledBundle encode(ad::Tape& tape, const FeatureBatch& batch,
                                 const ModalityParamsT<ad::Var>& params) {
  batch.validate();
  return encode(tape.constant(batch.features), params);
}

namespace detail {

inline void require_latent(const DisentangledBundle& b, const ad::Var& common_slot,
                           const TwoLayerT<ad::Var>& decoder, const char* what) {
  const std::size_t d = b.latent();
  for (const ad::Var* v : {&b.specific, &b.common_unrelated, &b.specific_unrelated, &common_slot}) {
    if (v->cols() != d || v->rows() != b.common.rows())
      throw std::invalid_argument(std::string(what) + ": bundle shapes disagree");
  }
  if (input_width(decoder) != 4 * d)
    throw std::invalid_argument(std::string(what) + ": decoder expects width " +
                                std::to_string(input_width(decoder)) + ", bundle gives " +
                                std::to_string(4 * d));
}

}  // namespace detail

/// Decodes N_c | N_s | F_s | common_slot.
inline ad::Var decode_with(const DisentangledBundle& bundle, const ad::Var& common_slot,
                           const ModalityParamsT<ad::Var>& params) {
  detail::require_latent(bundle, common_slot, params.decoder, "decode");
  const ad::Var joined = ad::concat_cols(
      {bundle.common_unrelated, bundle.specific_unrelated, bundle.specific, common_slot});
  return two_layer(joined, params.decoder);
}

inline ad::Var decode_self(const DisentangledBundle& bundle, const ModalityParamsT<ad::Var>& params) {
  return decode_with(bundle, bundle.common, params);
}

inline ad::Var decode_cross(const DisentangledBundle& bundle, const ad::Var& other_common,
                            const ModalityParamsT<ad::Var>& params) {
  return decode_with(bundle, other_common, params);
}

}  // namespace mmdr
