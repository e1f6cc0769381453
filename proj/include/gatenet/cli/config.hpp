#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gatenet/data.hpp"
#include "gatenet/model.hpp"
#include "gatenet/trainer.hpp"

namespace gatenet::cli {

struct DataConfig {
  std::string source = "file";  // file | planted
  std::string train_path;
  std::string test_path;        // empty: split the training file
  char delimiter = '\t';
  std::string schema;
  std::size_t min_count = 10;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;       // split and synthesis seed

  std::size_t planted_fields = 10;
  std::size_t planted_signal = 2;
  std::size_t planted_n = 50000;
  PlantedOptions planted;
};

struct AblateConfig {
  std::vector<std::string> axes{"gate_combo"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<Family> families{Family::kFM, Family::kDNN, Family::kDeepFM};
  std::vector<Family> combo_families{Family::kDNN, Family::kDeepFM};
  Family tuning_family = Family::kDeepFM;
  std::vector<std::size_t> embedding_sizes{10, 20, 30, 40, 50};
  std::vector<std::size_t> depths{2, 3, 4, 5, 6};
  std::vector<ops::Activation> activations{ops::Activation::kLinear, ops::Activation::kRelu,
                                           ops::Activation::kSigmoid, ops::Activation::kTanh};
};

// Defaults-merged run configuration. Model defaults: k=10, widths
// 400,400,400, relu, dropout 0.5; gate defaults private + vector-wise with
// sigmoid (embedding gate) and tanh (hidden gate); Adam lr 1e-4, batch 1000.
struct RunConfig {
  DataConfig data;
  ModelSpec model;
  // Gate sub-settings are kept even while a gate is switched off so that
  // ablations can enable it with the configured settings.
  GateConfig embed_gate;
  HiddenGateConfig hidden_gate;
  TrainConfig train;
  bool report_wall_time = false;
  AblateConfig ablate;

  // `section.key` = value pairs. Every unknown key and bad value is
  // collected and reported in one ConfigError.
  void apply(const std::vector<std::pair<std::string, std::string>>& entries);
  // The effective configuration, loadable by parse_config.
  std::string to_text() const;
};

// Sections in brackets, `key = value` lines, `#` or `;` comments.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);
RunConfig load_config(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& overrides);
RunConfig parse_config(std::string_view text,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Splits `key=value`; throws ConfigError otherwise.
std::pair<std::string, std::string> parse_assignment(std::string_view text);

// All known keys, in the order they are written.
std::vector<std::string> config_keys();

}  // namespace gatenet::cli
