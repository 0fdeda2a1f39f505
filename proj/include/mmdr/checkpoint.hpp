#pragma once

// Checkpoints are JSON documents. Doubles are emitted in shortest round-trip
// form, so a save/load cycle reproduces every parameter and optimizer moment
// bit for bit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mmdr/config.hpp"
#include "mmdr/layers.hpp"
#include "mmdr/model.hpp"
#include "mmdr/optim.hpp"

namespace mmdr {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  AdamState adam;
  TrainConfig config;
  std::size_t epoch = 0;
  double best_validation = std::numeric_limits<double>::infinity();
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

inline nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"d_v", d.input[0]}, {"d_a", d.input[1]}, {"latent", d.latent}, {"hidden", d.hidden}};
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json params = nlohmann::json::array();
  c.model.visit([&](const Matrix& m) { params.push_back(detail::matrix_to_json(m)); });
  nlohmann::json first = nlohmann::json::array(), second = nlohmann::json::array();
  for (const Matrix& m : c.adam.first) first.push_back(detail::matrix_to_json(m));
  for (const Matrix& m : c.adam.second) second.push_back(detail::matrix_to_json(m));
  nlohmann::json best = nullptr;
  if (std::isfinite(c.best_validation)) best = c.best_validation;
  return {{"format", "mmdr-checkpoint"},
          {"version", kCheckpointVersion},
          {"dims", detail::dims_to_json(dims_of(c.model))},
          {"config", format_train_config(c.config)},
          {"epoch", c.epoch},
          {"best_validation", best},
          {"params", params},
          {"adam", {{"step", c.adam.step}, {"first", first}, {"second", second}}}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mmdr-checkpoint" || j.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format or version");
  Checkpoint c;
  std::istringstream cfg(j.at("config").get<std::string>());
  c.config = parse_train_config(cfg);

  const auto& d = j.at("dims");
  ModelDims dims;
  dims.input = {d.at("d_v").get<std::size_t>(), d.at("d_a").get<std::size_t>()};
  dims.latent = d.at("latent").get<std::size_t>();
  dims.hidden = d.at("hidden").get<std::size_t>();
  c.model = init_model(dims, 0);

  const auto& params = j.at("params");
  auto slots = leaves(c.model);
  if (params.size() != slots.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Matrix m = detail::matrix_from_json(params[i]);
    if (!m.same_shape(*slots[i])) throw std::runtime_error("checkpoint: parameter shape mismatch");
    *slots[i] = std::move(m);
  }

  const auto& adam = j.at("adam");
  c.adam.step = adam.at("step").get<std::uint64_t>();
  for (const auto& m : adam.at("first")) c.adam.first.push_back(detail::matrix_from_json(m));
  for (const auto& m : adam.at("second")) c.adam.second.push_back(detail::matrix_from_json(m));
  if (c.adam.first.size() != slots.size() || c.adam.second.size() != slots.size())
    throw std::runtime_error("checkpoint: optimizer moment count mismatch");

  c.epoch = j.at("epoch").get<std::size_t>();
  const auto& best = j.at("best_validation");
  c.best_validation = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(c).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace mmdr
