#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mmdr/mmdr.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

mmdr::TrainConfig read_config(const fs::path& path) {
  auto in = open_input(path);
  try {
    return mmdr::parse_train_config(in);
  } catch (const mmdr::ParseError& e) {
    throw e.in(path.string());
  }
}

int run_gradcheck(std::uint64_t seed, std::size_t count) {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = mmdr::full_gradient_suite(seed, count);
  std::size_t failed = 0, skipped = 0;
  double worst = 0.0;
  for (const auto& c : cases) {
    if (c.skipped) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, c.max_relative_error);
    if (!c.passed()) {
      ++failed;
      std::cout << "FAIL " << c.name << " seed=" << c.seed << " rel_err=" << c.max_relative_error << '\n';
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << cases.size() << " checks, " << failed << " failed, " << skipped
            << " skipped at hinge kinks, worst relative error " << worst << ", " << secs << " s\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disentangled multimodal representation learning toolkit"};
  app.require_subcommand(1);

  std::string spec_path, data_dir, config_path, out_path, ckpt_path, report_path;
  std::uint64_t seed = 0;
  std::size_t seed_count = 10, bins = 8;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "key=value generator spec")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model and save the best checkpoint");
  train->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "checkpoint path")->required();

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--ckpt", ckpt_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--report", report_path)->required();

  auto* ablate = app.add_subcommand("ablate", "Retrain with single loss terms removed");
  ablate->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  ablate->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", out_path)->required();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  grad->add_option("--seed", seed, "first seed");
  grad->add_option("--count", seed_count, "number of seeds")->check(CLI::PositiveNumber);

  auto* attn = app.add_subcommand("dump-attn", "Write per-sample attention weights");
  auto* embed = app.add_subcommand("dump-embed", "Write per-sample related/unrelated/fused vectors");
  for (auto* sub : {attn, embed}) {
    sub->add_option("--ckpt", ckpt_path)->required()->check(CLI::ExistingFile);
    sub->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
    sub->add_option("--out", out_path)->required();
  }

  auto* mi = app.add_subcommand("analyze-mi", "Per-segment cross-modal mutual information");
  mi->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  mi->add_option("--bins", bins)->check(CLI::PositiveNumber);
  mi->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto in = open_input(spec_path);
      mmdr::SyntheticSpec spec;
      try {
        spec = mmdr::parse_synthetic_spec(in);
      } catch (const mmdr::ParseError& e) {
        throw e.in(spec_path);
      }
      const mmdr::Dataset data = mmdr::generate(spec);
      mmdr::save_dataset(data, out_path);
      std::cout << "wrote " << data.size() << " samples to " << out_path << '\n';
    } else if (*train) {
      const mmdr::TrainConfig config = read_config(config_path);
      const mmdr::Dataset data = mmdr::load_dataset(data_dir);
      const mmdr::TrainResult r = mmdr::train(data, config);
      mmdr::save_checkpoint(r.best, out_path);
      auto log = open_output(out_path + ".log.csv");
      mmdr::write_training_log_csv(log, r.log);
      std::cout << "epochs " << r.epochs_run << ", best epoch " << r.best.epoch
                << ", validation loss " << r.best.best_validation << '\n';
    } else if (*eval) {
      const mmdr::Checkpoint c = mmdr::load_checkpoint(ckpt_path);
      const mmdr::MetricsReport r = mmdr::evaluate(c, mmdr::load_dataset(data_dir));
      auto out = open_output(report_path);
      mmdr::write_metrics_csv(out, r);
      std::cout << "MAE " << r.mae << " RMSE " << r.rmse;
      if (r.accuracy) std::cout << " accuracy " << *r.accuracy << " macro-F1 " << *r.macro_f1;
      std::cout << '\n';
    } else if (*ablate) {
      const mmdr::TrainConfig config = read_config(config_path);
      const auto rows =
          mmdr::ablate(mmdr::load_dataset(data_dir), config, mmdr::default_ablation_sets());
      auto out = open_output(out_path);
      mmdr::write_ablation_csv(out, rows);
      mmdr::write_ablation_csv(std::cout, rows);
    } else if (*grad) {
      return run_gradcheck(seed, seed_count);
    } else if (*attn || *embed) {
      const mmdr::Checkpoint c = mmdr::load_checkpoint(ckpt_path);
      const mmdr::Dataset data = mmdr::load_dataset(data_dir);
      const mmdr::Predictions p = mmdr::predict(c.model, data, c.config.mode);
      auto out = open_output(out_path);
      if (*attn) mmdr::write_attention_csv(out, p.weights);
      else mmdr::write_embedding_csv(out, p, data.labels);
    } else if (*mi) {
      const auto scores = mmdr::segment_mi(mmdr::load_dataset(data_dir), bins);
      auto out = open_output(out_path);
      mmdr::write_mi_csv(out, scores);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
