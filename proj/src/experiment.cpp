#include "splitsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "splitsim/dcor.hpp"
#include "splitsim/errors.hpp"
#include "splitsim/numerics.hpp"

namespace splitsim {

namespace {

using nlohmann::json;

json optional_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

struct Dataset {
  Batch train, test;
  std::vector<std::size_t> vocab_sizes;
};

Dataset load_dataset(const ExperimentConfig& config) {
  Dataset ds;
  if (config.data.synthetic) {
    auto [train, test] = generate_synthetic(*config.data.synthetic);
    ds.train = std::move(train);
    ds.test = std::move(test);
  } else {
    CsvDatasetOptions options;
    options.subsample_ratio = config.data.csv->subsample_ratio;
    options.train_fraction = config.data.csv->train_fraction;
    options.split_seed = config.train.seed;
    CsvDataset csv = load_csv_dataset(config.data.csv->path, config.data.csv->schema, options);
    ds.train = std::move(csv.train);
    ds.test = std::move(csv.test);
    ds.vocab_sizes = std::move(csv.categorical_vocab_sizes);
  }
  return ds;
}

struct Parties {
  NonLabelParty nl;
  LabelParty lp;
};

Parties build_parties(const ExperimentConfig& config, const Dataset& ds) {
  Parties p;
  Rng nl_init(derive_seed(config.train.seed, 1));
  Rng lp_init(derive_seed(config.train.seed, 2));

  for (std::size_t vocab : ds.vocab_sizes) {
    p.nl.encoder.tables.push_back(
        make_embedding_table(vocab, config.model.embedding_dim, nl_init));
  }
  const std::size_t f_input = p.nl.encoder.output_dim(ds.train.continuous.cols());
  p.nl.f = make_mlp(f_input, config.model.f_widths, Activation::relu,
                    config.model.cut_activation, nl_init);
  p.nl.opt.lr = config.train.lr;
  p.nl.rng = Rng(derive_seed(config.train.seed, 3));

  std::vector<std::size_t> h_widths = config.model.h_widths;
  h_widths.push_back(1);  // final logit
  p.lp.h = make_mlp(config.model.f_widths.back(), h_widths, Activation::relu,
                    Activation::identity, lp_init);
  p.lp.opt.lr = config.train.lr;
  p.lp.rng = Rng(derive_seed(config.train.seed, 4));
  p.lp.defense = config.defense;
  p.lp.flips.bind_key(p.lp.rng);
  return p;
}

void append_stack_params(const MlpStack& stack, std::vector<double>& out) {
  for (const DenseLayer& layer : stack.layers) {
    out.insert(out.end(), layer.weight.data().begin(), layer.weight.data().end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
}

std::vector<double> flatten_parameters(const Parties& p) {
  std::vector<double> params;
  for (const auto& table : p.nl.encoder.tables) {
    params.insert(params.end(), table.weights.data().begin(), table.weights.data().end());
  }
  append_stack_params(p.nl.f, params);
  append_stack_params(p.lp.h, params);
  return params;
}

Matrix head_rows(const Matrix& m, std::size_t count) {
  const std::size_t n = std::min(count, m.rows());
  Matrix out(n, m.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = m.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

void write_activation_dump(const std::string& dir, const ActivationCapture& capture) {
  std::filesystem::create_directories(dir);
  char buf[64];
  for (std::size_t layer = 0; layer < capture.layers.size(); ++layer) {
    const Matrix& m = capture.layers[layer];
    const std::string path =
        dir + "/activations_layer" + std::to_string(layer + 1) + ".csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open dump file: " + path);
    out << "layer,row";
    for (std::size_t j = 0; j < m.cols(); ++j) out << ",c" << j;
    out << ",label\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << (layer + 1) << ',' << i;
      const auto row = m.row(i);
      for (std::size_t j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
        out << ',' << buf;
      }
      out << ',' << static_cast<int>(capture.labels[i]) << '\n';
    }
  }
}

}  // namespace

json metrics_to_json(const MetricsRecord& r) {
  json leak_layers = json::array();
  for (std::size_t i = 0; i < r.spectral_leak.size(); ++i) {
    leak_layers.push_back({{"layer", i + 1},
                           {"leak_auc", optional_to_json(r.spectral_leak[i])},
                           {"degenerate", static_cast<bool>(r.spectral_degenerate[i])}});
  }
  return json{{"step", r.step},
              {"epoch", r.epoch},
              {"train_lc", r.train_lc},
              {"train_ld", optional_to_json(r.train_ld)},
              {"cut_layer_dcor", optional_to_json(r.cut_layer_dcor)},
              {"dcor_degenerate", r.dcor_degenerate},
              {"test_auc", r.test_auc},
              {"spectral_leak", leak_layers},
              {"norm_leak", json{{"leak_auc", optional_to_json(r.norm_leak)},
                                 {"degenerate", r.norm_degenerate}}}};
}

RunResult run_experiment(const ExperimentConfig& config, std::ostream* metrics_stream,
                         const std::optional<std::string>& dump_dir) {
  config.validate();
  const Dataset ds = load_dataset(config);
  if (ds.train.size() < 2 || ds.test.size() < 2) {
    throw ConfigError("dataset splits are too small to train and evaluate");
  }

  Parties parties = build_parties(config, ds);
  AuditLog audit;
  Rng shuffle_rng(derive_seed(config.train.seed, 5));

  const std::size_t n_train = ds.train.size();
  const std::size_t batch = config.train.batch_size;
  const std::size_t steps_per_epoch = (n_train + batch - 1) / batch;
  const std::size_t total_steps = steps_per_epoch * config.train.epochs;

  RunResult result;
  result.total_steps = total_steps;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> last_batch_labels;
  double last_lc = 0.0;
  std::optional<double> last_ld;

  const std::size_t eval_slice = 512;
  std::size_t step = 0;

  auto evaluate_now = [&](std::size_t epoch) {
    MetricsRecord record;
    record.step = step;
    record.epoch = epoch;
    record.train_lc = last_lc;
    record.train_ld = last_ld;
    record.test_auc = evaluate(parties.nl, parties.lp, ds.test);

    const ActivationCapture capture = capture_activations(parties.nl, ds.train);
    // Cut-layer correlation probe on a fixed-size head slice.
    const Matrix cut_head = head_rows(capture.layers.back(), eval_slice);
    const std::vector<double> head_labels(capture.labels.begin(),
                                          capture.labels.begin() + cut_head.rows());
    try {
      record.cut_layer_dcor = distance_correlation(cut_head, head_labels).dcor;
    } catch (const Error&) {
      record.dcor_degenerate = true;
    }

    if (config.attack.spectral) {
      AttackPrior prior{config.attack.rule, std::nullopt};
      for (const Matrix& layer_acts : capture.layers) {
        const SpectralAttackResult attack = spectral_attack_batched(layer_acts, prior, batch);
        std::optional<double> leak;
        try {
          leak = leak_auc(attack, capture.labels, config.attack.mode);
        } catch (const SingleClass&) {
        }
        record.spectral_leak.push_back(leak);
        record.spectral_degenerate.push_back(attack.degenerate);
      }
    }

    if (config.attack.norm && parties.nl.last_gradient.rows() >= 2) {
      const std::vector<double> norms = norm_attack(parties.nl.last_gradient);
      try {
        record.norm_leak = leak_auc(norms, last_batch_labels);
      } catch (const SingleClass&) {
        record.norm_degenerate = true;
      }
    }

    if (metrics_stream) {
      (*metrics_stream) << metrics_to_json(record).dump() << '\n';
    }
    result.records.push_back(std::move(record));
  };

  for (std::size_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
    // Fisher-Yates with the experiment's own stream.
    for (std::size_t i = n_train - 1; i > 0; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t end = std::min(start + batch, n_train);
      if (end - start < 2) continue;  // a 1-row tail cannot form a batch
      const Batch minibatch =
          ds.train.slice(std::span(order).subspan(start, end - start));
      ++step;
      try {
        const StepReport report = train_step(parties.nl, parties.lp, minibatch, audit);
        last_lc = report.lc;
        last_ld = report.ld;
        last_batch_labels = minibatch.labels;
      } catch (const Error& e) {
        throw Error("training step " + std::to_string(step) + " failed: " + e.what());
      }
      if (step % config.attack.eval_every == 0) evaluate_now(epoch);
    }
  }
  if (result.records.empty() || result.records.back().step != step) {
    evaluate_now(config.train.epochs);
  }

  if (dump_dir) {
    write_activation_dump(*dump_dir, capture_activations(parties.nl, ds.train));
  }

  result.audit_records = audit.records().size();
  result.audit_violations = audit.violation_count();
  result.final_parameters = flatten_parameters(parties);
  return result;
}

void print_summary(std::ostream& out, const ExperimentConfig& config, const RunResult& result) {
  const MetricsRecord& last = result.final_record();
  out << "steps: " << result.total_steps << "  epochs: " << config.train.epochs
      << "  seed: " << config.train.seed << '\n';
  out << std::fixed << std::setprecision(4);
  out << "final test AUC:        " << last.test_auc << '\n';
  if (!last.spectral_leak.empty()) {
    out << "spectral leak AUC by layer:";
    for (std::size_t i = 0; i < last.spectral_leak.size(); ++i) {
      out << "  L" << (i + 1) << "=";
      if (last.spectral_leak[i]) {
        out << *last.spectral_leak[i];
      } else {
        out << "n/a";
      }
    }
    out << '\n';
  }
  out << "norm leak AUC:         ";
  if (last.norm_leak) {
    out << *last.norm_leak;
  } else {
    out << "n/a";
  }
  out << '\n';
  out << "cut-layer dcor:        ";
  if (last.cut_layer_dcor) {
    out << *last.cut_layer_dcor;
  } else {
    out << "degenerate";
  }
  out << '\n';
  out << "audit: " << result.audit_records << " records, " << result.audit_violations
      << " violations\n";
  out.unsetf(std::ios::fixed);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double_field(const std::string& field, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw UnparseableReal("cannot parse '" + field + "' in " + context);
  }
  return v;
}

bool is_numeric_field(const std::string& field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  return ec == std::errc() && ptr == field.data() + field.size();
}

// Either an activation dump (leading layer,row columns, trailing label)
// or a plain numeric matrix with an optional header.
struct EmbeddingsFile {
  std::vector<std::pair<std::size_t, Matrix>> layers;  // (layer id, rows x d)
};

EmbeddingsFile read_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedRow("empty embeddings file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> first = split_line(line);

  const bool dump_format = first.size() >= 4 && first[0] == "layer" && first[1] == "row";
  bool first_is_header = dump_format;
  if (!dump_format) {
    for (const auto& f : first) {
      if (!is_numeric_field(f)) first_is_header = true;
    }
  }

  const std::size_t width = first.size();
  std::vector<std::vector<std::string>> rows;
  if (!first_is_header) rows.push_back(std::move(first));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != width) throw MalformedRow("ragged embeddings row in " + path);
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw MalformedRow("no data rows in " + path);

  EmbeddingsFile out;
  if (dump_format) {
    const std::size_t d = width - 3;
    std::vector<std::pair<std::size_t, std::vector<double>>> flat;
    for (const auto& r : rows) {
      const auto layer = static_cast<std::size_t>(parse_double_field(r[0], path));
      std::vector<double> values(d);
      for (std::size_t j = 0; j < d; ++j) values[j] = parse_double_field(r[2 + j], path);
      flat.emplace_back(layer, std::move(values));
    }
    std::vector<std::size_t> layer_ids;
    for (const auto& [layer, values] : flat) {
      if (std::find(layer_ids.begin(), layer_ids.end(), layer) == layer_ids.end()) {
        layer_ids.push_back(layer);
      }
    }
    for (std::size_t layer : layer_ids) {
      std::vector<double> data;
      std::size_t count = 0;
      for (const auto& [l, values] : flat) {
        if (l != layer) continue;
        data.insert(data.end(), values.begin(), values.end());
        ++count;
      }
      out.layers.emplace_back(layer, Matrix(count, d, std::move(data)));
    }
  } else {
    std::vector<double> data;
    data.reserve(rows.size() * width);
    for (const auto& r : rows) {
      for (const auto& f : r) data.push_back(parse_double_field(f, path));
    }
    out.layers.emplace_back(1, Matrix(rows.size(), width, std::move(data)));
  }
  return out;
}

std::vector<double> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file: " + path);
  std::vector<double> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && !is_numeric_field(line)) {
      first = false;
      continue;  // header
    }
    first = false;
    const double y = parse_double_field(line, path);
    if (y != 0.0 && y != 1.0) throw MalformedRow("label must be 0 or 1 in " + path);
    labels.push_back(y);
  }
  if (labels.empty()) throw MalformedRow("no labels in " + path);
  return labels;
}

}  // namespace

std::vector<AttackReportRow> run_offline_attack(const std::string& embeddings_path,
                                                const std::string& labels_path,
                                                const OfflineAttackOptions& options) {
  const EmbeddingsFile embeddings = read_embeddings_file(embeddings_path);
  const std::vector<double> labels = read_labels_file(labels_path);

  std::ofstream scores_out;
  if (options.scores_out) {
    scores_out.open(*options.scores_out, std::ios::trunc);
    if (!scores_out) throw IoError("cannot open scores output: " + *options.scores_out);
    scores_out << "layer,row,score\n";
  }

  std::vector<AttackReportRow> rows;
  for (const auto& [layer_id, matrix] : embeddings.layers) {
    if (matrix.rows() != labels.size()) {
      throw ShapeMismatch("embeddings layer " + std::to_string(layer_id) + " has " +
                          std::to_string(matrix.rows()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
    }
    AttackReportRow row;
    row.layer = layer_id;
    row.method = options.method;
    row.n = matrix.rows();
    std::vector<double> scores;
    if (options.method == "spectral") {
      row.mode = options.mode == LeakMode::scores ? "scores" : "hard_labels";
      const AttackPrior prior{options.rule, std::nullopt};
      const std::size_t bs = options.batch_size == 0 ? matrix.rows() : options.batch_size;
      const SpectralAttackResult attack = spectral_attack_batched(matrix, prior, bs);
      row.degenerate = attack.degenerate;
      try {
        row.leak = leak_auc(attack, labels, options.mode);
      } catch (const SingleClass&) {
      }
      scores = attack.oriented_scores;
    } else if (options.method == "norm") {
      row.mode = "scores";
      scores = norm_attack(matrix);
      try {
        row.leak = leak_auc(scores, labels);
      } catch (const SingleClass&) {
      }
    } else {
      throw ConfigError("unknown attack method '" + options.method + "'");
    }
    if (options.scores_out) {
      char buf[64];
      for (std::size_t i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", scores[i]);
        scores_out << layer_id << ',' << i << ',' << buf << '\n';
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_attack_report(std::ostream& out, const std::vector<AttackReportRow>& rows) {
  out << "layer,method,mode,leak_auc,n,degenerate_flag\n";
  char buf[64];
  for (const auto& row : rows) {
    out << row.layer << ',' << row.method << ',' << row.mode << ',';
    if (row.leak) {
      std::snprintf(buf, sizeof(buf), "%.6f", *row.leak);
      out << buf;
    } else {
      out << "n/a";
    }
    out << ',' << row.n << ',' << (row.degenerate ? 1 : 0) << '\n';
  }
}

void generate_dataset_files(const SyntheticSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto [train, test] = generate_synthetic(spec);
  write_batch_csv(out_dir + "/train.csv", train, {});
  write_batch_csv(out_dir + "/test.csv", test, {});
}

}  // namespace splitsim
