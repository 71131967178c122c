#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitsim/config.hpp"
#include "splitsim/protocol.hpp"

namespace splitsim {

// One evaluation snapshot: losses, utility and per-layer leakage.
struct MetricsRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double train_lc = 0.0;
  std::optional<double> train_ld;
  std::optional<double> cut_layer_dcor;
  bool dcor_degenerate = false;
  double test_auc = 0.0;
  std::vector<std::optional<double>> spectral_leak;  // per f layer, cut layer last
  std::vector<bool> spectral_degenerate;
  std::optional<double> norm_leak;
  bool norm_degenerate = false;

  std::optional<double> cut_spectral_leak() const {
    return spectral_leak.empty() ? std::nullopt : spectral_leak.back();
  }
};

nlohmann::json metrics_to_json(const MetricsRecord& record);

struct RunResult {
  std::vector<MetricsRecord> records;
  std::size_t audit_records = 0;
  std::size_t audit_violations = 0;
  std::size_t total_steps = 0;
  // Every trained parameter flattened in declaration order (non-label
  // encoder tables, f layers, h layers); lets callers verify that attack
  // evaluation is a read-only observer.
  std::vector<double> final_parameters;

  const MetricsRecord& final_record() const { return records.back(); }
};

// Trains per the config with periodic attack evaluation. Each evaluation
// appends one MetricsRecord; when `metrics_stream` is given, records are
// also written as JSON lines. `dump_dir`, when given, receives per-layer
// activation CSVs captured at the end of training.
RunResult run_experiment(const ExperimentConfig& config, std::ostream* metrics_stream,
                         const std::optional<std::string>& dump_dir);

void print_summary(std::ostream& out, const ExperimentConfig& config, const RunResult& result);

// Offline attack entry point shared by the CLI: embeddings (plain numeric
// CSV or an activation dump) plus a label file, one report row per layer.
struct AttackReportRow {
  std::size_t layer = 0;
  std::string method;
  std::string mode;
  std::optional<double> leak;
  std::size_t n = 0;
  bool degenerate = false;
};

struct OfflineAttackOptions {
  std::string method = "spectral";  // or "norm"
  AssignmentRule rule = AssignmentRule::by_size;
  LeakMode mode = LeakMode::scores;
  std::size_t batch_size = 0;  // 0 = single batch over all rows
  std::optional<std::string> scores_out;
};

std::vector<AttackReportRow> run_offline_attack(const std::string& embeddings_path,
                                                const std::string& labels_path,
                                                const OfflineAttackOptions& options);

void write_attack_report(std::ostream& out, const std::vector<AttackReportRow>& rows);

// gen-data: synthesizes a dataset and writes train.csv / test.csv under
// out_dir in the ingestion format.
void generate_dataset_files(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace splitsim
