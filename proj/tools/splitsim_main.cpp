#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "splitsim/config.hpp"
#include "splitsim/errors.hpp"
#include "splitsim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

int run_command(const std::string& config_path, const std::string& out_path,
                const std::optional<std::string>& dump_dir,
                const std::optional<uint64_t>& seed_override) {
  splitsim::ExperimentConfig config = splitsim::load_experiment_config(config_path);
  if (seed_override) {
    config.train.seed = *seed_override;
    if (config.data.synthetic) config.data.synthetic->seed = *seed_override;
  }

  std::ofstream metrics(out_path, std::ios::trunc);
  if (!metrics) throw splitsim::IoError("cannot open metrics output: " + out_path);
  const splitsim::RunResult result = splitsim::run_experiment(config, &metrics, dump_dir);
  splitsim::print_summary(std::cout, config, result);
  return kExitOk;
}

int attack_command(const std::string& embeddings, const std::string& labels,
                   const splitsim::OfflineAttackOptions& options,
                   const std::optional<std::string>& out_path) {
  const auto rows = splitsim::run_offline_attack(embeddings, labels, options);
  if (out_path) {
    std::ofstream out(*out_path, std::ios::trunc);
    if (!out) throw splitsim::IoError("cannot open report output: " + *out_path);
    splitsim::write_attack_report(out, rows);
  } else {
    splitsim::write_attack_report(std::cout, rows);
  }
  return kExitOk;
}

int gen_data_command(const std::string& spec_path, const std::string& out_dir) {
  const splitsim::SyntheticSpec spec = splitsim::load_synthetic_spec(spec_path);
  splitsim::generate_dataset_files(spec, out_dir);
  std::cout << "wrote " << out_dir << "/train.csv and " << out_dir << "/test.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-party split-learning simulator: training, label-leakage "
               "attacks and defenses"};
  app.require_subcommand(1);

  std::string config_path, metrics_out = "metrics.jsonl";
  std::optional<std::string> dump_dir;
  std::optional<uint64_t> seed_override;
  CLI::App* run = app.add_subcommand("run", "train with periodic attack evaluation");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--out", metrics_out, "metrics JSON-lines output path");
  run->add_option("--dump-activations", dump_dir, "directory for per-layer activation dumps");
  run->add_option("--seed", seed_override, "override the config seed");

  std::string embeddings_path, labels_path;
  std::string method = "spectral", rule = "by_size", mode = "scores";
  std::size_t attack_batch = 0;
  std::optional<std::string> report_out, scores_out;
  CLI::App* attack = app.add_subcommand("attack", "offline attack on dumped embeddings");
  attack->add_option("--embeddings", embeddings_path, "embeddings CSV (matrix or dump)")
      ->required();
  attack->add_option("--labels", labels_path, "true labels, one per line")->required();
  attack->add_option("--method", method, "spectral or norm");
  attack->add_option("--rule", rule, "by_size or by_score");
  attack->add_option("--mode", mode, "scores or hard_labels");
  attack->add_option("--batch-size", attack_batch, "cluster per batch of this many rows");
  attack->add_option("--out", report_out, "report CSV path (default: stdout)");
  attack->add_option("--scores-out", scores_out, "per-row attack scores CSV path");

  std::string spec_path, data_out_dir;
  CLI::App* gen = app.add_subcommand("gen-data", "write synthetic train/test CSVs");
  gen->add_option("--spec", spec_path, "synthetic dataset spec JSON")->required();
  gen->add_option("--out", data_out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (run->parsed()) {
      return run_command(config_path, metrics_out, dump_dir, seed_override);
    }
    if (attack->parsed()) {
      splitsim::OfflineAttackOptions options;
      options.method = method;
      if (rule == "by_size") {
        options.rule = splitsim::AssignmentRule::by_size;
      } else if (rule == "by_score") {
        options.rule = splitsim::AssignmentRule::by_score;
      } else {
        throw splitsim::ConfigError("unknown rule '" + rule + "'");
      }
      if (mode == "scores") {
        options.mode = splitsim::LeakMode::scores;
      } else if (mode == "hard_labels") {
        options.mode = splitsim::LeakMode::hard_labels;
      } else {
        throw splitsim::ConfigError("unknown mode '" + mode + "'");
      }
      options.batch_size = attack_batch;
      options.scores_out = scores_out;
      return attack_command(embeddings_path, labels_path, options, report_out);
    }
    return gen_data_command(spec_path, data_out_dir);
  } catch (const splitsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
