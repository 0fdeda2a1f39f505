#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdr/autodiff.hpp"
#include "mmdr/checkpoint.hpp"
#include "mmdr/config.hpp"
#include "mmdr/dataset.hpp"
#include "mmdr/layers.hpp"
#include "mmdr/losses.hpp"
#include "mmdr/metrics.hpp"
#include "mmdr/model.hpp"
#include "mmdr/optim.hpp"

namespace mmdr {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded shuffle, then the last `validation_fraction` of the order is held out.
inline Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5117u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  s.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

inline Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  Batch b;
  for (std::size_t m = 0; m < 2; ++m) b.features[m] = data.pooled[m].gather_rows(indices);
  b.y_reg = Matrix(indices.size(), 1);
  b.y_aux = Matrix(indices.size(), 1);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    b.y_reg[i] = data.labels.at(indices[i]).y_reg;
    b.y_aux[i] = data.labels.at(indices[i]).y_aux;
  }
  return b;
}

/// Consecutive chunks of `batch_size`; a trailing chunk of one row joins the previous chunk.
inline std::vector<std::vector<std::size_t>> chunk(std::span<const std::size_t> order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() > 1 && out.back().size() < 2) {
    auto tail = std::move(out.back());
    out.pop_back();
    out.back().insert(out.back().end(), tail.begin(), tail.end());
  }
  return out;
}

inline ModelDims dims_for(const Dataset& data, const TrainConfig& config) {
  ModelDims d;
  d.input = {data.width(Modality::kVisual), data.width(Modality::kAcoustic)};
  d.latent = config.latent_d;
  d.hidden = config.hidden_h;
  return d;
}

inline LossBreakdown& operator+=(LossBreakdown& a, const LossBreakdown& b) {
  a.task += b.task;
  a.untask += b.untask;
  a.orth += b.orth;
  a.cmd += b.cmd;
  a.recon += b.recon;
  a.align += b.align;
  a.contri += b.contri;
  a.total += b.total;
  return a;
}

inline LossBreakdown scaled(LossBreakdown a, double k) {
  a.task *= k;
  a.untask *= k;
  a.orth *= k;
  a.cmd *= k;
  a.recon *= k;
  a.align *= k;
  a.contri *= k;
  a.total *= k;
  return a;
}

/// Owns the model and optimizer state; advances one mini-batch at a time.
class Trainer {
 public:
  Trainer(const ModelDims& dims, const TrainConfig& config)
      : model_(init_model(dims, config.seed)), config_(config) {
    config_.validate();
    adam_ = make_adam_state(leaves(model_));
    locate_untask_head();
  }

  explicit Trainer(Checkpoint c)
      : model_(std::move(c.model)), adam_(std::move(c.adam)), config_(c.config), epoch_(c.epoch),
        best_validation_(c.best_validation) {
    config_.validate();
    if (adam_.first.size() != leaves(model_).size())
      throw std::invalid_argument("Trainer: optimizer state does not match the model");
    locate_untask_head();
  }

  /// One optimizer step on `batch`; returns the objective evaluated before the update.
  LossBreakdown step(const Batch& batch) {
    if (batch.size() < 2) throw std::invalid_argument("Trainer::step: batch needs at least 2 rows");
    ad::Tape tape;
    const ModelT<ad::Var> bound = bind(tape, model_);
    const ForwardPass pass = forward(tape, bound, batch, config_.objective());
    tape.backward(pass.total);
    std::vector<Matrix> grads = gradients(bound);

    if (config_.toggles.untask && config_.untask_update == UntaskUpdate::kAdversarial) {
      // The head itself learns to read y_aux from the unrelated features; the
      // encoders keep the reversed-label gradient from the objective.
      ad::Tape head_tape;
      const AffineT<ad::Var> head = bind(head_tape, model_.heads.untask);
      const ad::Var prob =
          ad::sigmoid(affine(head_tape.constant(pass.unrelated.value()), head));
      head_tape.backward(ad::bce_mean(prob, batch.y_aux));
      grads[untask_offset_] = head.weight.grad();
      grads[untask_offset_ + 1] = head.bias.grad();
    }

    AdamSettings s;
    s.learning_rate = config_.learning_rate;
    adam_step(leaves(model_), grads, adam_, s);
    return pass.breakdown;
  }

  /// Mean objective over consecutive batches of the given samples (no update).
  LossBreakdown objective(const Dataset& data, std::span<const std::size_t> indices) const {
    const auto batches = chunk(indices, config_.batch_size);
    if (batches.empty() || batches.front().size() < 2)
      throw std::invalid_argument("Trainer::objective: need at least 2 samples");
    LossBreakdown sum;
    for (const auto& idx : batches) {
      ad::Tape tape;
      const ModelT<ad::Var> bound = bind(tape, model_, false);
      sum += forward(tape, bound, make_batch(data, idx), config_.objective()).breakdown;
    }
    return scaled(sum, 1.0 / static_cast<double>(batches.size()));
  }

  Checkpoint checkpoint() const { return Checkpoint{model_, adam_, config_, epoch_, best_validation_}; }

  const Model& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  const AdamState& optimizer() const { return adam_; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t e) { epoch_ = e; }
  void set_best_validation(double v) { best_validation_ = v; }

 private:
  void locate_untask_head() {
    const auto all = leaves(model_);
    const auto it = std::find(all.begin(), all.end(), &model_.heads.untask.weight);
    untask_offset_ = static_cast<std::size_t>(it - all.begin());
  }

  Model model_;
  AdamState adam_;
  TrainConfig config_;
  std::size_t epoch_ = 0;
  double best_validation_ = std::numeric_limits<double>::infinity();
  std::size_t untask_offset_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  LossBreakdown train;
  LossBreakdown validation;

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  Checkpoint initial;
  Checkpoint best;
  std::vector<EpochLog> log;
  Split split;
  std::size_t epochs_run = 0;
};

inline std::vector<std::size_t> epoch_order(std::span<const std::size_t> train, std::uint64_t seed,
                                            std::size_t epoch) {
  std::vector<std::size_t> order(train.begin(), train.end());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0xE90Cu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/*!
 * \brief Mini-batch training with early stopping on the validation objective.
 *
 * Returns the checkpoint with the lowest validation total seen (epoch 0 is the
 * initialization) and one log entry per trained epoch.
 */
inline TrainResult train(const Dataset& data, const TrainConfig& config,
                         std::optional<Split> split = std::nullopt) {
  config.validate();
  data.validate();
  TrainResult result;
  result.split = split ? *split : split_indices(data.size(), config.validation_fraction, config.seed);
  if (result.split.train.size() < config.batch_size || result.split.validation.size() < 2)
    throw std::invalid_argument("train: dataset is smaller than one batch");

  Trainer trainer(dims_for(data, config), config);
  const double initial_val = trainer.objective(data, result.split.validation).total;
  trainer.set_best_validation(initial_val);
  result.initial = trainer.checkpoint();
  result.best = result.initial;

  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = epoch_order(result.split.train, config.seed, epoch);
    LossBreakdown sum;
    std::size_t steps = 0;
    for (const auto& idx : chunk(order, config.batch_size)) {
      sum += trainer.step(make_batch(data, idx));
      ++steps;
    }
    trainer.set_epoch(epoch);
    EpochLog entry{epoch, scaled(sum, 1.0 / static_cast<double>(steps)),
                   trainer.objective(data, result.split.validation)};
    result.log.push_back(entry);
    result.epochs_run = epoch;

    if (entry.validation.total < result.best.best_validation) {
      trainer.set_best_validation(entry.validation.total);
      result.best = trainer.checkpoint();
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

/// Row-wise outputs of a model over a whole dataset.
struct Predictions {
  Matrix score;                 // N x 1; raw score or probability in classification mode
  Matrix weights;               // N x 4 attention weights
  Matrix fused;                 // N x d
  std::array<Matrix, kStacked> related;    // stack order
  std::array<Matrix, kStacked> unrelated;  // N_c^v, N_c^a, N_s^v, N_s^a
};

inline Predictions predict(const Model& model, const Dataset& data, TaskMode mode) {
  ad::Tape tape;
  const ModelT<ad::Var> bound = bind(tape, model, false);
  std::array<DisentangledBundle, 2> bundles;
  for (Modality m : kModalities) {
    const auto i = index_of(m);
    if (data.width(m) != input_width(model.drd[m].common_encoder))
      throw std::invalid_argument("predict: dataset width does not match the checkpoint");
    bundles[i] = encode(tape.constant(data.pooled[i]), bound.drd[m]);
  }
  const FusionResult fusion = fuse(bundles[0], bundles[1], bound.iaf);
  ad::Var score = two_layer(fusion.fused, bound.heads.task);
  if (mode == TaskMode::kClassification) score = ad::sigmoid(score);

  Predictions p;
  p.score = score.value();
  p.weights = fusion.weights.value();
  p.fused = fusion.fused.value();
  const Stack rel = stack_related(bundles[0], bundles[1]);
  const Stack unrel = stack_unrelated(bundles[0], bundles[1]);
  for (std::size_t e = 0; e < kStacked; ++e) {
    p.related[e] = rel[e].value();
    p.unrelated[e] = unrel[e].value();
  }
  return p;
}

inline MetricsReport evaluate(const Model& model, const TrainConfig& config, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const Predictions p = predict(model, data, config.mode);
  if (config.mode == TaskMode::kRegression) {
    const Matrix y = data.y_reg();
    return regression_metrics(p.score.values(), y.values());
  }
  const Matrix y = data.y_aux();
  MetricsReport r = regression_metrics(p.score.values(), y.values());
  add_classification_metrics(r, p.score.values(), y.values());
  return r;
}

inline MetricsReport evaluate(const Checkpoint& c, const Dataset& data) {
  return evaluate(c.model, c.config, data);
}

/// Side-by-side N_c^v | N_c^a | N_s^v | N_s^a per sample.
inline Matrix stacked_unrelated(const Predictions& p) {
  const std::size_t n = p.unrelated[0].rows(), d = p.unrelated[0].cols();
  Matrix out(n, kStacked * d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = 0; e < kStacked; ++e)
      for (std::size_t c = 0; c < d; ++c) out(r, e * d + c) = p.unrelated[e](r, c);
  return out;
}

/// CMD between the two modalities' common features over the whole dataset.
inline double common_feature_cmd(const Model& model, const Dataset& data, int max_order) {
  const Predictions p = predict(model, data, TaskMode::kRegression);
  ad::Tape tape;
  CmdConfig cfg;
  cfg.max_order = max_order;
  return cmd_loss(tape.constant(p.related[0]), tape.constant(p.related[1]), cfg).scalar();
}

struct AblationRow {
  LossToggles toggles;
  MetricsReport metrics;  // on the validation split
  std::size_t best_epoch = 0;
};

/// Table rows: the full objective first, then each listed term removed on its own.
inline std::vector<std::vector<std::string>> default_ablation_sets() {
  return {{}, {"orth"}, {"cmd"}, {"untask"}, {"align"}, {"contri"}, {"recon"}};
}

/// Trains one model per toggle set with a shared seed and split.
inline std::vector<AblationRow> ablate(const Dataset& data, const TrainConfig& base,
                                       const std::vector<std::vector<std::string>>& disabled_sets) {
  base.validate();
  const Split split = split_indices(data.size(), base.validation_fraction, base.seed);
  const Dataset validation = data.subset(split.validation);
  std::vector<AblationRow> rows;
  for (const auto& disabled : disabled_sets) {
    TrainConfig cfg = base;
    for (const auto& term : disabled) {
      if (term == "task") throw std::invalid_argument("ablate: the task term cannot be disabled");
      toggle_ref(cfg.toggles, term) = false;
    }
    const TrainResult r = train(data, cfg, split);
    rows.push_back(AblationRow{cfg.toggles, evaluate(r.best, validation), r.best.epoch});
  }
  return rows;
}

}  // namespace mmdr
