#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitsim/attacks.hpp"
#include "splitsim/data.hpp"
#include "splitsim/defenses.hpp"
#include "splitsim/nn.hpp"

namespace splitsim {

struct ModelConfig {
  std::vector<std::size_t> f_widths{32, 32, 32, 32, 32};
  std::optional<std::size_t> cut_dim;  // must equal f_widths.back() when given
  std::vector<std::size_t> h_widths{32, 32};  // hidden widths; a 1-logit layer is appended
  std::size_t embedding_dim = 4;
  Activation cut_activation = Activation::relu;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  double lr = 1e-3;
  std::size_t epochs = 3;
  uint64_t seed = 1;
};

struct AttackSettings {
  bool spectral = true;
  bool norm = true;
  AssignmentRule rule = AssignmentRule::by_size;
  LeakMode mode = LeakMode::scores;
  std::size_t eval_every = 50;
};

struct CsvDataConfig {
  std::string path;
  CsvSchema schema;
  double subsample_ratio = 1.0;
  double train_fraction = 0.9;
};

struct DataConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<CsvDataConfig> csv;
};

// Full declarative description of one experiment. Unknown JSON keys are a
// hard error at every level.
struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  DefenseConfig defense;
  AttackSettings attack;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

SyntheticSpec parse_synthetic_spec(const nlohmann::json& j);
SyntheticSpec load_synthetic_spec(const std::string& path);

}  // namespace splitsim
