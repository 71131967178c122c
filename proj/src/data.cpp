#include "splitsim/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "splitsim/errors.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

Batch Batch::slice(std::span<const std::size_t> rows) const {
  Batch out;
  out.continuous = Matrix(rows.size(), continuous.cols());
  out.categorical.resize(categorical.size());
  for (auto& col : out.categorical) col.reserve(rows.size());
  out.labels.reserve(rows.size());
  out.example_indices.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    if (src >= size()) throw IndexOutOfRange("Batch::slice row out of range");
    const auto src_row = continuous.row(src);
    auto dst_row = out.continuous.row(r);
    for (std::size_t j = 0; j < continuous.cols(); ++j) dst_row[j] = src_row[j];
    for (std::size_t k = 0; k < categorical.size(); ++k) {
      out.categorical[k].push_back(categorical[k][src]);
    }
    out.labels.push_back(labels[src]);
    out.example_indices.push_back(example_indices[src]);
  }
  return out;
}

namespace {

// Split decision as a pure function of (seed, example index): stable under
// any reordering of the file or batches.
bool in_test_split(uint64_t seed, std::size_t index, double test_fraction) {
  const uint64_t h = mix64(seed ^ mix64(static_cast<uint64_t>(index) + 0x51ed270bULL));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < test_fraction;
}

bool keep_in_subsample(uint64_t seed, std::size_t index, double ratio) {
  if (ratio >= 1.0) return true;
  const uint64_t h = mix64(seed ^ mix64(static_cast<uint64_t>(index) + 0xa5a5a5ULL));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < ratio;
}

struct ColumnStats {
  double min = 0.0;
  double max = 0.0;
};

// Min-max over the given rows; constant columns normalize to all zeros.
std::vector<ColumnStats> column_stats(const Matrix& m) {
  std::vector<ColumnStats> stats(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double mn = m(0, j), mx = m(0, j);
    for (std::size_t i = 1; i < m.rows(); ++i) {
      mn = std::min(mn, m(i, j));
      mx = std::max(mx, m(i, j));
    }
    stats[j] = {mn, mx};
  }
  return stats;
}

void apply_minmax(Matrix& m, const std::vector<ColumnStats>& stats, bool clamp) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double range = stats[j].max - stats[j].min;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double v = range > 0.0 ? (m(i, j) - stats[j].min) / range : 0.0;
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      m(i, j) = v;
    }
  }
}

}  // namespace

std::pair<Batch, Batch> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2) throw InvalidArgument("generate_synthetic: n must be >= 2");
  if (spec.dim < 1) throw InvalidArgument("generate_synthetic: dim must be >= 1");
  if (!(spec.positive_ratio > 0.0 && spec.positive_ratio < 1.0)) {
    throw InvalidArgument("generate_synthetic: positive_ratio must lie in (0,1)");
  }
  if (spec.noise_sigma <= 0.0) throw InvalidArgument("generate_synthetic: noise_sigma must be > 0");
  if (!(spec.positive_signal_fraction > 0.0 && spec.positive_signal_fraction <= 1.0)) {
    throw InvalidArgument("generate_synthetic: positive_signal_fraction must lie in (0,1]");
  }
  if (spec.class_separation < 0.0) {
    throw InvalidArgument("generate_synthetic: class_separation must be >= 0");
  }

  Rng rng(spec.seed);
  const double mean_step = spec.class_separation / std::sqrt(static_cast<double>(spec.dim));

  Matrix features(spec.n, spec.dim);
  std::vector<double> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double y = rng.bernoulli(spec.positive_ratio) ? 1.0 : 0.0;
    labels[i] = y;
    const bool carries_signal =
        y == 1.0 && (spec.positive_signal_fraction >= 1.0 ||
                     rng.bernoulli(spec.positive_signal_fraction));
    auto row = features.row(i);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      row[j] = (carries_signal ? mean_step : 0.0) + spec.noise_sigma * rng.normal();
    }
  }

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < spec.n; ++i) {
    (in_test_split(spec.seed, i, 0.1) ? test_rows : train_rows).push_back(i);
  }
  if (train_rows.empty() || test_rows.empty()) {
    throw InvalidArgument("generate_synthetic: split produced an empty side; increase n");
  }

  auto build = [&](const std::vector<std::size_t>& rows) {
    Batch b;
    b.continuous = Matrix(rows.size(), spec.dim);
    b.labels.reserve(rows.size());
    b.example_indices.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = features.row(rows[r]);
      auto dst = b.continuous.row(r);
      for (std::size_t j = 0; j < spec.dim; ++j) dst[j] = src[j];
      b.labels.push_back(labels[rows[r]]);
      b.example_indices.push_back(rows[r]);
    }
    return b;
  };
  Batch train = build(train_rows);
  Batch test = build(test_rows);

  const auto stats = column_stats(train.continuous);
  apply_minmax(train.continuous, stats, false);
  apply_minmax(test.continuous, stats, true);
  return {std::move(train), std::move(test)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawCsv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv: " + path);
  RawCsv raw;
  std::string line;
  if (!std::getline(in, line)) throw MalformedRow("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  raw.header = split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != raw.header.size()) {
      throw MalformedRow("row " + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(raw.header.size()));
    }
    raw.rows.push_back(std::move(fields));
  }
  return raw;
}

double parse_real(const std::string& field, std::size_t row, const std::string& column) {
  // Empty field = NA, substituted with 0 before normalization.
  if (field.empty()) return 0.0;
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw UnparseableReal("row " + std::to_string(row) + ", column '" + column +
                          "': cannot parse '" + field + "'");
  }
  return value;
}

struct ParsedCsv {
  std::vector<std::string> real_names, cat_names;
  Matrix reals;                                   // raw values, NA already 0
  std::vector<std::vector<int64_t>> categorical;  // first-appearance codes
  std::vector<double> labels;
  std::vector<CategoryMap> category_maps;
};

ParsedCsv parse_csv(const std::string& path, const CsvSchema& schema) {
  const RawCsv raw = read_csv(path);

  std::vector<std::size_t> real_cols, cat_cols;
  std::size_t label_col = raw.header.size();
  ParsedCsv out;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    const auto kind = schema.kind_of(raw.header[c]);
    if (!kind) {
      throw ConfigError("csv column '" + raw.header[c] + "' not declared in schema");
    }
    switch (*kind) {
      case ColumnKind::real:
        real_cols.push_back(c);
        out.real_names.push_back(raw.header[c]);
        break;
      case ColumnKind::categorical:
        cat_cols.push_back(c);
        out.cat_names.push_back(raw.header[c]);
        break;
      case ColumnKind::label:
        if (label_col != raw.header.size()) {
          throw ConfigError("csv declares more than one label column");
        }
        label_col = c;
        break;
    }
  }
  if (label_col == raw.header.size()) {
    throw MissingLabelColumn("no label column found in " + path);
  }

  const std::size_t n = raw.rows.size();
  if (n == 0) throw MalformedRow("csv has no data rows: " + path);

  out.reals = Matrix(n, real_cols.size());
  out.categorical.assign(cat_cols.size(), {});
  out.labels.resize(n);
  out.category_maps.resize(cat_cols.size());
  std::vector<std::unordered_map<std::string, int64_t>> cat_codes(cat_cols.size());
  for (std::size_t k = 0; k < cat_cols.size(); ++k) {
    out.categorical[k].reserve(n);
    out.category_maps[k].column = out.cat_names[k];
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = raw.rows[i];
    for (std::size_t j = 0; j < real_cols.size(); ++j) {
      out.reals(i, j) = parse_real(row[real_cols[j]], i + 2, out.real_names[j]);
    }
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
      const std::string& value = row[cat_cols[k]];  // "" is the NA category
      auto [it, inserted] =
          cat_codes[k].emplace(value, static_cast<int64_t>(cat_codes[k].size()));
      if (inserted) out.category_maps[k].values.push_back(value);
      out.categorical[k].push_back(it->second);
    }
    const std::string& label_field = row[label_col];
    const double y = parse_real(label_field, i + 2, raw.header[label_col]);
    if (y != 0.0 && y != 1.0) {
      throw MalformedRow("row " + std::to_string(i + 2) + ": label must be 0 or 1");
    }
    out.labels[i] = y;
  }
  return out;
}

}  // namespace

std::optional<ColumnKind> CsvSchema::kind_of(const std::string& name) const {
  for (const auto& [col, kind] : columns) {
    if (col == name) return kind;
  }
  return std::nullopt;
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  ParsedCsv parsed = parse_csv(path, schema);
  IngestResult res;
  const std::size_t n = parsed.labels.size();
  const auto stats = column_stats(parsed.reals);
  apply_minmax(parsed.reals, stats, false);
  res.batch.continuous = std::move(parsed.reals);
  res.batch.categorical = std::move(parsed.categorical);
  res.batch.labels = std::move(parsed.labels);
  res.batch.example_indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.batch.example_indices[i] = i;
  res.category_maps = std::move(parsed.category_maps);
  res.real_columns = std::move(parsed.real_names);
  return res;
}

CsvDataset load_csv_dataset(const std::string& path, const CsvSchema& schema,
                            const CsvDatasetOptions& options) {
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1)");
  }
  if (!(options.subsample_ratio > 0.0 && options.subsample_ratio <= 1.0)) {
    throw ConfigError("subsample_ratio must lie in (0,1]");
  }
  ParsedCsv parsed = parse_csv(path, schema);
  const std::size_t n = parsed.labels.size();

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep_in_subsample(options.split_seed, i, options.subsample_ratio)) continue;
    (in_test_split(options.split_seed, i, 1.0 - options.train_fraction) ? test_rows
                                                                        : train_rows)
        .push_back(i);
  }
  if (train_rows.empty() || test_rows.empty()) {
    throw ConfigError("csv split produced an empty side: " + path);
  }

  Batch full;
  full.continuous = std::move(parsed.reals);
  full.categorical = std::move(parsed.categorical);
  full.labels = std::move(parsed.labels);
  full.example_indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) full.example_indices[i] = i;

  CsvDataset ds;
  ds.train = full.slice(train_rows);
  ds.test = full.slice(test_rows);
  ds.category_maps = std::move(parsed.category_maps);
  for (const auto& map : ds.category_maps) {
    ds.categorical_vocab_sizes.push_back(map.values.size());
  }

  const auto stats = column_stats(ds.train.continuous);
  apply_minmax(ds.train.continuous, stats, false);
  apply_minmax(ds.test.continuous, stats, true);
  return ds;
}

void write_batch_csv(const std::string& path, const Batch& batch,
                     const std::vector<CategoryMap>& category_maps) {
  if (!category_maps.empty() && category_maps.size() != batch.categorical.size()) {
    throw ShapeMismatch("write_batch_csv: category map count mismatch");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);

  for (std::size_t k = 0; k < batch.categorical.size(); ++k) {
    out << (category_maps.empty() ? "c" + std::to_string(k) : category_maps[k].column) << ',';
  }
  for (std::size_t j = 0; j < batch.continuous.cols(); ++j) out << 'f' << j << ',';
  out << "label\n";

  char buf[64];
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < batch.categorical.size(); ++k) {
      const int64_t code = batch.categorical[k][i];
      if (category_maps.empty()) {
        out << code << ',';
      } else {
        out << category_maps[k].values.at(static_cast<std::size_t>(code)) << ',';
      }
    }
    const auto row = batch.continuous.row(i);
    for (std::size_t j = 0; j < batch.continuous.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << buf << ',';
    }
    out << static_cast<int>(batch.labels[i]) << '\n';
  }
  if (!out) throw IoError("short write: " + path);
}

}  // namespace splitsim
