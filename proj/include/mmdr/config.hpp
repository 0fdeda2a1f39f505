#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mmdr/keyvalue.hpp"
#include "mmdr/losses.hpp"
#include "mmdr/model.hpp"

namespace mmdr {

/// How the unrelated-feature head is updated.
///   adversarial: the head fits y_aux while encoders follow the reversed-label loss.
///   joint: everything descends the reversed-label loss.
enum class UntaskUpdate { kAdversarial, kJoint };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  double epsilon_margin = kDefaultMargin;
  int cmd_K = 5;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  LossToggles toggles;
  std::size_t latent_d = 8;
  std::size_t hidden_h = 16;
  TaskMode mode = TaskMode::kRegression;
  UntaskUpdate untask_update = UntaskUpdate::kAdversarial;
  double validation_fraction = 0.2;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
    if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
    if (cmd_K < 2) throw std::invalid_argument("TrainConfig: cmd_K must be >= 2");
    if (!(epsilon_margin > 0.0)) throw std::invalid_argument("TrainConfig: epsilon_margin must be > 0");
    if (latent_d == 0 || hidden_h == 0)
      throw std::invalid_argument("TrainConfig: latent_d and hidden_h must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw std::invalid_argument("TrainConfig: validation_fraction must be in (0, 1)");
  }

  ObjectiveSettings objective() const {
    ObjectiveSettings s;
    s.alpha = alpha;
    s.beta = beta;
    s.margin = epsilon_margin;
    s.cmd.max_order = cmd_K;
    s.toggles = toggles;
    s.mode = mode;
    return s;
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline const char* to_string(TaskMode m) {
  return m == TaskMode::kRegression ? "regression" : "classification";
}
inline const char* to_string(UntaskUpdate u) {
  return u == UntaskUpdate::kAdversarial ? "adversarial" : "joint";
}

/// key=value lines; toggles are `use_<term> = 0|1`. Unknown keys are rejected.
inline TrainConfig parse_train_config(std::istream& in) {
  TrainConfig c;
  for (const KeyValue& kv : read_key_values(in)) {
    const auto count = [&] { return static_cast<std::size_t>(parse_uint(kv.value, kv.line)); };
    const auto real = [&] { return parse_double(kv.value, kv.line); };
    if (kv.key == "learning_rate") c.learning_rate = real();
    else if (kv.key == "batch_size") c.batch_size = count();
    else if (kv.key == "alpha") c.alpha = real();
    else if (kv.key == "beta") c.beta = real();
    else if (kv.key == "epsilon_margin") c.epsilon_margin = real();
    else if (kv.key == "cmd_K") c.cmd_K = static_cast<int>(count());
    else if (kv.key == "max_epochs") c.max_epochs = count();
    else if (kv.key == "patience") c.patience = count();
    else if (kv.key == "seed") c.seed = parse_uint(kv.value, kv.line);
    else if (kv.key == "latent_d") c.latent_d = count();
    else if (kv.key == "hidden_h") c.hidden_h = count();
    else if (kv.key == "validation_fraction") c.validation_fraction = real();
    else if (kv.key == "mode") {
      if (kv.value == "regression") c.mode = TaskMode::kRegression;
      else if (kv.value == "classification") c.mode = TaskMode::kClassification;
      else throw ParseError("mode must be regression or classification", kv.line);
    } else if (kv.key == "untask_update") {
      if (kv.value == "adversarial") c.untask_update = UntaskUpdate::kAdversarial;
      else if (kv.value == "joint") c.untask_update = UntaskUpdate::kJoint;
      else throw ParseError("untask_update must be adversarial or joint", kv.line);
    } else if (kv.key.rfind("use_", 0) == 0) {
      try {
        toggle_ref(c.toggles, kv.key.substr(4)) = parse_bool(kv.value, kv.line);
      } catch (const std::invalid_argument&) {
        throw ParseError("unknown key '" + kv.key + "'", kv.line);
      }
    } else {
      throw ParseError("unknown key '" + kv.key + "'", kv.line);
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 0);
  }
  return c;
}

inline std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "learning_rate = " << format_double(c.learning_rate) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "alpha = " << format_double(c.alpha) << '\n'
      << "beta = " << format_double(c.beta) << '\n'
      << "epsilon_margin = " << format_double(c.epsilon_margin) << '\n'
      << "cmd_K = " << c.cmd_K << '\n'
      << "max_epochs = " << c.max_epochs << '\n'
      << "patience = " << c.patience << '\n'
      << "seed = " << c.seed << '\n'
      << "latent_d = " << c.latent_d << '\n'
      << "hidden_h = " << c.hidden_h << '\n'
      << "mode = " << to_string(c.mode) << '\n'
      << "untask_update = " << to_string(c.untask_update) << '\n'
      << "validation_fraction = " << format_double(c.validation_fraction) << '\n';
  for (const char* term : kTermNames)
    out << "use_" << term << " = " << (toggle_value(c.toggles, term) ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace mmdr
