#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmdr/engine.hpp"
#include "mmdr/iaf.hpp"
#include "mmdr/keyvalue.hpp"
#include "mmdr/metrics.hpp"
#include "mmdr/model.hpp"

namespace mmdr {

inline void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "count,mae,rmse,accuracy,macro_f1\n"
      << r.count << ',' << format_double(r.mae) << ',' << format_double(r.rmse) << ','
      << (r.accuracy ? format_double(*r.accuracy) : "") << ','
      << (r.macro_f1 ? format_double(*r.macro_f1) : "") << '\n';
}

/// sample_id,w_Fc_v,w_Fc_a,w_Fs_v,w_Fs_a
inline void write_attention_csv(std::ostream& out, const Matrix& weights) {
  out << "sample_id";
  for (std::string_view name : kStackNames) out << ",w_" << name;
  out << '\n';
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < weights.cols(); ++c) out << ',' << format_double(weights(r, c));
    out << '\n';
  }
}

/// One row per sample: y_reg, y_aux, then Fc_v.., Fc_a.., Fs_v.., Fs_a.., Nc_v.., Nc_a.., Ns_v.., Ns_a.., FS..
inline void write_embedding_csv(std::ostream& out, const Predictions& p,
                                std::span<const SampleLabels> labels) {
  static constexpr std::array<const char*, kStacked> kUnrelatedNames = {"Nc_v", "Nc_a", "Ns_v", "Ns_a"};
  const std::size_t d = p.fused.cols();
  out << "sample_id,y_reg,y_aux";
  for (std::string_view name : kStackNames)
    for (std::size_t c = 0; c < d; ++c) out << ',' << name << '_' << c;
  for (const char* name : kUnrelatedNames)
    for (std::size_t c = 0; c < d; ++c) out << ',' << name << '_' << c;
  for (std::size_t c = 0; c < d; ++c) out << ",FS_" << c;
  out << '\n';
  for (std::size_t r = 0; r < p.fused.rows(); ++r) {
    out << r << ',' << format_double(labels[r].y_reg) << ',' << labels[r].y_aux;
    for (const Matrix& m : p.related)
      for (std::size_t c = 0; c < d; ++c) out << ',' << format_double(m(r, c));
    for (const Matrix& m : p.unrelated)
      for (std::size_t c = 0; c < d; ++c) out << ',' << format_double(m(r, c));
    for (std::size_t c = 0; c < d; ++c) out << ',' << format_double(p.fused(r, c));
    out << '\n';
  }
}

inline void write_mi_csv(std::ostream& out, std::span<const double> mi) {
  out << "segment,mi_nats\n";
  for (std::size_t l = 0; l < mi.size(); ++l) out << l << ',' << format_double(mi[l]) << '\n';
}

inline std::string disabled_terms(const LossToggles& t) {
  std::string out;
  for (const char* term : kTermNames)
    if (!toggle_value(t, term)) out += (out.empty() ? "" : "+") + std::string(term);
  return out.empty() ? "none" : out;
}

inline void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "removed,best_epoch,mae,rmse\n";
  for (const auto& r : rows)
    out << disabled_terms(r.toggles) << ',' << r.best_epoch << ',' << format_double(r.metrics.mae) << ','
        << format_double(r.metrics.rmse) << '\n';
}

inline void write_training_log_csv(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch";
  for (const char* split : {"train", "val"})
    for (const char* term : {"task", "untask", "orth", "cmd", "recon", "align", "contri", "total"})
      out << ',' << split << '_' << term;
  out << '\n';
  for (const auto& e : log) {
    out << e.epoch;
    for (const LossBreakdown* b : {&e.train, &e.validation})
      for (double v : {b->task, b->untask, b->orth, b->cmd, b->recon, b->align, b->contri, b->total})
        out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace mmdr
