#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdr/autodiff.hpp"
#include "mmdr/drd.hpp"
#include "mmdr/iaf.hpp"
#include "mmdr/layers.hpp"
#include "mmdr/losses.hpp"

namespace mmdr {

/*!
 * \brief Prediction heads.
 *
 * task: two-layer MLP on the fused vector. contribution: one affine + sigmoid
 * shared by the four related features. untask: one affine + sigmoid over the
 * four unrelated features laid side by side.
 */
template <class T>
struct HeadsT {
  TwoLayerT<T> task;
  AffineT<T> contribution;
  AffineT<T> untask;

  template <class F>
  void visit(F&& f) {
    task.visit(f);
    contribution.visit(f);
    untask.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    task.visit(f);
    contribution.visit(f);
    untask.visit(f);
  }
};

template <class T>
struct ModelT {
  DrdParamsT<T> drd;
  IafParamsT<T> iaf;
  HeadsT<T> heads;

  template <class F>
  void visit(F&& f) {
    drd.visit(f);
    iaf.visit(f);
    heads.visit(f);
  }
  template <class F>
  void visit(F&& f) const {
    drd.visit(f);
    iaf.visit(f);
    heads.visit(f);
  }
};

using Model = ModelT<Matrix>;
using ModelDims = DrdDims;

inline Model init_model(const ModelDims& dims, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x1d7u};
  std::mt19937_64 rng(seq);
  Model m;
  m.drd = init_drd(dims, rng);
  m.iaf = init_iaf(dims.latent, rng);
  m.heads.task = init_two_layer(dims.latent, dims.hidden, 1, rng);
  m.heads.contribution = init_affine(dims.latent, 1, rng);
  m.heads.untask = init_affine(kStacked * dims.latent, 1, rng);
  return m;
}

inline ModelDims dims_of(const Model& m) {
  ModelDims d;
  for (Modality mod : kModalities) d.input[index_of(mod)] = input_width(m.drd[mod].common_encoder);
  d.latent = m.iaf.query.rows();
  d.hidden = m.drd[Modality::kVisual].common_encoder.hidden.weight.cols();
  return d;
}

enum class TaskMode { kRegression, kClassification };

/// Which objective terms contribute to the total. A disabled term is logged as 0.
struct LossToggles {
  bool task = true;
  bool untask = true;
  bool orth = true;
  bool cmd = true;
  bool recon = true;
  bool align = true;
  bool contri = true;

  friend bool operator==(const LossToggles&, const LossToggles&) = default;
};

inline constexpr std::array<const char*, 7> kTermNames = {"task",  "untask", "orth",  "cmd",
                                                          "recon", "align",  "contri"};

inline bool& toggle_ref(LossToggles& t, const std::string& name) {
  if (name == "task") return t.task;
  if (name == "untask") return t.untask;
  if (name == "orth") return t.orth;
  if (name == "cmd") return t.cmd;
  if (name == "recon") return t.recon;
  if (name == "align") return t.align;
  if (name == "contri") return t.contri;
  throw std::invalid_argument("unknown loss term '" + name + "'");
}

inline bool toggle_value(const LossToggles& t, const std::string& name) {
  LossToggles copy = t;
  return toggle_ref(copy, name);
}

struct ObjectiveSettings {
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  double margin = kDefaultMargin;
  CmdConfig cmd;
  LossToggles toggles;
  TaskMode mode = TaskMode::kRegression;
};

/// One mini-batch: pooled features per modality plus targets (B x 1 each).
struct Batch {
  std::array<Matrix, 2> features;
  Matrix y_reg;
  Matrix y_aux;

  std::size_t size() const { return y_reg.rows(); }
};

struct ForwardPass {
  std::array<ad::Var, 2> inputs;
  std::array<DisentangledBundle, 2> bundles;
  std::array<ad::Var, 2> recon_self;
  std::array<ad::Var, 2> recon_cross;
  FusionResult fusion;
  ad::Var prediction;       // raw score (regression) or probability (classification), B x 1
  ad::Var unrelated;        // N_c^v | N_c^a | N_s^v | N_s^a, B x 4d
  ad::Var untask_prob;      // B x 1, only when untask is enabled
  ContributionTerms contribution;  // only when contri or align is enabled
  ad::Var total;            // 1 x 1
  LossBreakdown breakdown;
};

inline ad::Var contribution_head(const ad::Var& feature, const AffineT<ad::Var>& head) {
  return ad::sigmoid(affine(feature, head));
}

/// Builds every enabled objective term for one batch on `tape`.
inline ForwardPass forward(ad::Tape& tape, const ModelT<ad::Var>& model, const Batch& batch,
                           const ObjectiveSettings& settings) {
  const LossToggles& on = settings.toggles;
  ForwardPass out;
  for (Modality m : kModalities) {
    const std::size_t i = index_of(m);
    out.inputs[i] = tape.constant(batch.features[i]);
    out.bundles[i] = encode(out.inputs[i], model.drd[m]);
  }
  const DisentangledBundle& bv = out.bundles[0];
  const DisentangledBundle& ba = out.bundles[1];

  out.fusion = fuse(bv, ba, model.iaf);
  const ad::Var head_out = two_layer(out.fusion.fused, model.heads.task);
  const Stack unrelated = stack_unrelated(bv, ba);
  out.unrelated = ad::concat_cols(std::span<const ad::Var>(unrelated));

  LossBreakdown& parts = out.breakdown;
  ad::Var total;
  auto accumulate = [&](const ad::Var& term, double weight) {
    const ad::Var weighted = weight == 1.0 ? term : ad::scale(term, weight);
    total = total.valid() ? ad::add(total, weighted) : weighted;
  };

  if (settings.mode == TaskMode::kRegression) {
    out.prediction = head_out;
  } else {
    out.prediction = ad::sigmoid(head_out);
  }
  if (on.task) {
    const ad::Var term = settings.mode == TaskMode::kRegression
                             ? task_loss(out.prediction, batch.y_reg)
                             : ad::bce_mean(out.prediction, batch.y_aux);
    parts.task = term.scalar();
    accumulate(term, 1.0);
  }

  if (on.untask) {
    out.untask_prob = ad::sigmoid(affine(out.unrelated, model.heads.untask));
    const ad::Var term = untask_loss(out.untask_prob, batch.y_aux);
    parts.untask = term.scalar();
    accumulate(term, 1.0);
  }

  if (on.orth) {
    const ad::Var term = orthogonality_loss(bv, ba);
    parts.orth = term.scalar();
    accumulate(term, settings.alpha);
  }

  if (on.cmd) {
    const ad::Var term = cmd_loss(bv.common, ba.common, settings.cmd);
    parts.cmd = term.scalar();
    accumulate(term, settings.alpha);
  }

  for (Modality m : kModalities) {
    const std::size_t i = index_of(m);
    if (!on.recon) break;
    out.recon_self[i] = decode_self(out.bundles[i], model.drd[m]);
    out.recon_cross[i] =
        decode_cross(out.bundles[i], out.bundles[index_of(other(m))].common, model.drd[m]);
  }
  if (on.recon) {
    const ad::Var term = reconstruction_loss(out.inputs, out.recon_self, out.recon_cross);
    parts.recon = term.scalar();
    accumulate(term, settings.alpha);
  }

  if (on.contri || on.align) {
    const Stack related = stack_related(bv, ba);
    std::array<ad::Var, kStacked> probs;
    for (std::size_t e = 0; e < kStacked; ++e)
      probs[e] = contribution_head(related[e], model.heads.contribution);
    out.contribution = contribution_loss(probs, batch.y_aux);
    if (on.contri) {
      parts.contri = out.contribution.total.scalar();
      accumulate(out.contribution.total, settings.beta);
    }
    if (on.align) {
      const ad::Var term = alignment_loss(out.fusion.weights,
                                          out.contribution.per_feature_values(), settings.margin);
      parts.align = term.scalar();
      accumulate(term, settings.beta);
    }
  }

  if (!total.valid()) total = tape.constant(Matrix(1, 1, 0.0));
  out.total = total;
  parts.total = total.scalar();
  return out;
}

}  // namespace mmdr
