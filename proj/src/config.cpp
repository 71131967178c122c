#include "splitsim/config.hpp"

#include <filesystem>
#include <fstream>

#include "splitsim/errors.hpp"

namespace splitsim {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
}

// Silent typos in experiment knobs would invalidate results, so any key
// outside the allowed set is fatal.
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown key '" + key + "' in " + context);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<int64_t>() <= 0) {
    throw ConfigError(std::string("'") + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

ColumnKind parse_column_kind(const std::string& name) {
  if (name == "real") return ColumnKind::real;
  if (name == "categorical") return ColumnKind::categorical;
  if (name == "label") return ColumnKind::label;
  throw ConfigError("unknown column kind '" + name + "'");
}

DataConfig parse_data(const json& j) {
  require_object(j, "data");
  reject_unknown_keys(j, {"synthetic", "csv"}, "data");
  DataConfig data;
  if (j.contains("synthetic") == j.contains("csv")) {
    throw ConfigError("data must contain exactly one of 'synthetic' or 'csv'");
  }
  if (j.contains("synthetic")) {
    data.synthetic = parse_synthetic_spec(j.at("synthetic"));
  } else {
    const json& c = j.at("csv");
    require_object(c, "data.csv");
    reject_unknown_keys(c, {"path", "schema", "subsample_ratio", "train_fraction"}, "data.csv");
    CsvDataConfig csv;
    if (!c.contains("path")) throw ConfigError("data.csv.path is required");
    csv.path = c.at("path").get<std::string>();
    if (!c.contains("schema")) throw ConfigError("data.csv.schema is required");
    require_object(c.at("schema"), "data.csv.schema");
    for (const auto& [column, kind] : c.at("schema").items()) {
      csv.schema.columns.emplace_back(column, parse_column_kind(kind.get<std::string>()));
    }
    csv.subsample_ratio = get_or<double>(c, "subsample_ratio", 1.0);
    csv.train_fraction = get_or<double>(c, "train_fraction", 0.9);
    data.csv = std::move(csv);
  }
  return data;
}

ModelConfig parse_model(const json& j) {
  require_object(j, "model");
  reject_unknown_keys(j, {"f_widths", "cut_dim", "h_widths", "embedding_dim", "cut_activation"},
                      "model");
  ModelConfig model;
  model.f_widths = get_or<std::vector<std::size_t>>(j, "f_widths", model.f_widths);
  model.h_widths = get_or<std::vector<std::size_t>>(j, "h_widths", model.h_widths);
  if (j.contains("cut_dim")) model.cut_dim = get_count(j, "cut_dim", 0);
  model.embedding_dim = get_count(j, "embedding_dim", model.embedding_dim);
  if (j.contains("cut_activation")) {
    model.cut_activation = parse_activation(j.at("cut_activation").get<std::string>());
  }
  return model;
}

TrainConfig parse_train(const json& j) {
  require_object(j, "train");
  reject_unknown_keys(j, {"batch_size", "lr", "epochs", "seed"}, "train");
  TrainConfig train;
  train.batch_size = get_count(j, "batch_size", train.batch_size);
  train.lr = get_or<double>(j, "lr", train.lr);
  train.epochs = get_count(j, "epochs", train.epochs);
  train.seed = get_or<uint64_t>(j, "seed", train.seed);
  return train;
}

DefenseConfig parse_defense(const json& j) {
  require_object(j, "defense");
  reject_unknown_keys(j, {"alpha_d", "label_dp_epsilon", "grad_noise_s", "dcor_floor"},
                      "defense");
  DefenseConfig defense;
  defense.alpha_d = get_or<double>(j, "alpha_d", 0.0);
  if (j.contains("label_dp_epsilon") && !j.at("label_dp_epsilon").is_null()) {
    defense.label_dp_epsilon = j.at("label_dp_epsilon").get<double>();
  }
  defense.grad_noise_s = get_or<double>(j, "grad_noise_s", 0.0);
  defense.dcor_floor = get_or<double>(j, "dcor_floor", 1e-8);
  return defense;
}

AttackSettings parse_attack(const json& j) {
  require_object(j, "attack");
  reject_unknown_keys(j, {"methods", "assignment_rule", "leak_mode", "eval_every"}, "attack");
  AttackSettings attack;
  if (j.contains("methods")) {
    attack.spectral = false;
    attack.norm = false;
    for (const auto& m : j.at("methods")) {
      const std::string name = m.get<std::string>();
      if (name == "spectral") {
        attack.spectral = true;
      } else if (name == "norm") {
        attack.norm = true;
      } else {
        throw ConfigError("unknown attack method '" + name + "'");
      }
    }
  }
  if (j.contains("assignment_rule")) {
    const std::string rule = j.at("assignment_rule").get<std::string>();
    if (rule == "by_size") {
      attack.rule = AssignmentRule::by_size;
    } else if (rule == "by_score") {
      attack.rule = AssignmentRule::by_score;
    } else {
      throw ConfigError("unknown assignment_rule '" + rule + "'");
    }
  }
  if (j.contains("leak_mode")) {
    const std::string mode = j.at("leak_mode").get<std::string>();
    if (mode == "scores") {
      attack.mode = LeakMode::scores;
    } else if (mode == "hard_labels") {
      attack.mode = LeakMode::hard_labels;
    } else {
      throw ConfigError("unknown leak_mode '" + mode + "'");
    }
  }
  attack.eval_every = get_count(j, "eval_every", attack.eval_every);
  return attack;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const nlohmann::json& j) {
  require_object(j, "synthetic spec");
  reject_unknown_keys(
      j,
      {"n", "positive_ratio", "dim", "class_separation", "noise_sigma",
       "positive_signal_fraction", "seed"},
      "synthetic spec");
  SyntheticSpec spec;
  if (!j.contains("n")) throw ConfigError("synthetic spec requires 'n'");
  spec.n = get_count(j, "n", 0);
  spec.positive_ratio = get_or<double>(j, "positive_ratio", spec.positive_ratio);
  spec.dim = get_count(j, "dim", spec.dim);
  spec.class_separation = get_or<double>(j, "class_separation", spec.class_separation);
  spec.noise_sigma = get_or<double>(j, "noise_sigma", spec.noise_sigma);
  spec.positive_signal_fraction =
      get_or<double>(j, "positive_signal_fraction", spec.positive_signal_fraction);
  spec.seed = get_or<uint64_t>(j, "seed", spec.seed);
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_synthetic_spec(j);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  require_object(j, "experiment config");
  reject_unknown_keys(j, {"data", "model", "train", "defense", "attack"}, "experiment config");
  ExperimentConfig config;
  if (!j.contains("data")) throw ConfigError("experiment config requires 'data'");
  config.data = parse_data(j.at("data"));
  if (j.contains("model")) config.model = parse_model(j.at("model"));
  if (j.contains("train")) config.train = parse_train(j.at("train"));
  if (j.contains("defense")) config.defense = parse_defense(j.at("defense"));
  if (j.contains("attack")) config.attack = parse_attack(j.at("attack"));
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

void ExperimentConfig::validate() const {
  if (!data.synthetic && !data.csv) throw ConfigError("no data source configured");
  if (data.csv) {
    if (!std::filesystem::exists(data.csv->path)) {
      throw ConfigError("csv file does not exist: " + data.csv->path);
    }
    bool has_label = false;
    for (const auto& [name, kind] : data.csv->schema.columns) {
      if (kind == ColumnKind::label) has_label = true;
    }
    if (!has_label) throw ConfigError("csv schema declares no label column");
  }
  if (model.f_widths.empty()) throw ConfigError("f_widths must not be empty");
  for (std::size_t w : model.f_widths) {
    if (w == 0) throw ConfigError("f layer widths must be >= 1");
  }
  for (std::size_t w : model.h_widths) {
    if (w == 0) throw ConfigError("h layer widths must be >= 1");
  }
  if (model.cut_dim && *model.cut_dim != model.f_widths.back()) {
    throw ConfigError("cut_dim must equal the last f width");
  }
  if (model.embedding_dim == 0) throw ConfigError("embedding_dim must be >= 1");
  if (train.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (train.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(train.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (attack.eval_every == 0) throw ConfigError("eval_every must be >= 1");
  defense.validate();
}

}  // namespace splitsim
