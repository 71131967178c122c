#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "splitsim/matrix.hpp"

namespace splitsim {

// Paired feature rows and binary labels, the unit of training and attack.
// Continuous entries live in [0,1]; example indices are globally unique
// within a dataset.
struct Batch {
  Matrix continuous;                              // n x c
  std::vector<std::vector<int64_t>> categorical;  // k columns, each length n
  std::vector<double> labels;                     // 0/1
  std::vector<std::size_t> example_indices;

  std::size_t size() const { return labels.size(); }
  Batch slice(std::span<const std::size_t> rows) const;
};

struct SyntheticSpec {
  std::size_t n = 0;
  double positive_ratio = 0.1;
  std::size_t dim = 10;
  double class_separation = 2.0;  // distance between class means, in sigma units of raw space
  double noise_sigma = 1.0;
  // Fraction of positives that carry the class-mean shift; the rest are
  // feature-identical to negatives. Below 1.0 this makes the positive
  // class a distinctive-subpopulation mixture, the geometry that makes
  // balanced datasets attackable by score (and caps test AUC near
  // 0.5 + fraction/2).
  double positive_signal_fraction = 1.0;
  uint64_t seed = 1;
};

// Class-conditional Gaussian features (means class_separation apart along
// a fixed unit direction), Bernoulli labels, deterministic 90/10 split by
// index hash. Features are min-max normalized with train-split statistics;
// test values are clamped to [0,1].
std::pair<Batch, Batch> generate_synthetic(const SyntheticSpec& spec);

enum class ColumnKind : uint8_t { real = 0, categorical = 1, label = 2 };

struct CsvSchema {
  // Column name -> kind; every header column must be declared and exactly
  // one column must be the label.
  std::vector<std::pair<std::string, ColumnKind>> columns;
  std::optional<ColumnKind> kind_of(const std::string& name) const;
};

struct CategoryMap {
  std::string column;
  std::vector<std::string> values;  // first-appearance order; "" is the NA category
};

struct IngestResult {
  Batch batch;
  std::vector<CategoryMap> category_maps;
  std::vector<std::string> real_columns;
};

// Whole-file ingestion: NA categoricals become the empty-string category,
// categorical values map to integers in first-appearance order, NA reals
// become 0 before min-max normalization, constant real columns become all
// zeros.
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);

struct CsvDatasetOptions {
  double subsample_ratio = 1.0;
  double train_fraction = 0.9;
  uint64_t split_seed = 0;
};

struct CsvDataset {
  Batch train, test;
  std::vector<CategoryMap> category_maps;
  std::vector<std::size_t> categorical_vocab_sizes;
};

// Ingests, subsamples and splits one CSV by index hash; real columns are
// normalized with train-split min/max and test values are clamped.
CsvDataset load_csv_dataset(const std::string& path, const CsvSchema& schema,
                            const CsvDatasetOptions& options);

// Writes a batch in the ingestion format (one label column named
// "label"), full double precision.
void write_batch_csv(const std::string& path, const Batch& batch,
                     const std::vector<CategoryMap>& category_maps);

}  // namespace splitsim
