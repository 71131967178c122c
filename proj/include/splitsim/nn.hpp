#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitsim/matrix.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

enum class Activation : uint8_t { relu = 0, identity = 1 };

struct DenseLayer {
  Matrix weight;             // in x out
  std::vector<double> bias;  // out
  Activation activation = Activation::relu;
};

struct MlpGrads {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
};

// Feed-forward stack with per-layer activation caches. The caches serve
// backprop and double as the per-layer attack surface (each layer's
// output on the latest forward batch).
struct MlpStack {
  std::vector<DenseLayer> layers;

  // Forward caches.
  Matrix cached_input;
  std::vector<Matrix> activations;
  bool has_cache = false;

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
};

// Appends a layer initialized uniformly in +-sqrt(6/(fan_in+fan_out)),
// bias zero.
void add_layer(MlpStack& stack, std::size_t in_dim, std::size_t out_dim,
               Activation act, Rng& rng);

// Builds in -> widths[0] -> ... -> widths.back(), every layer activated
// with `hidden`, except the final layer which uses `output`.
MlpStack make_mlp(std::size_t input_dim, std::span<const std::size_t> widths,
                  Activation hidden, Activation output, Rng& rng);

const Matrix& forward(MlpStack& stack, const Matrix& input);

// Exact reverse-mode gradients for the cached batch. Returns parameter
// gradients (per layer: weight then bias) and the gradient with respect
// to the stack input. Throws StaleCache without a matching forward pass.
std::pair<MlpGrads, Matrix> backward(MlpStack& stack, const Matrix& grad_output);

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad_logits;  // (sigmoid(l) - y) / n
};

// Mean binary cross entropy in the log-sum-exp form; stable for any
// finite logit.
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels);

double sigmoid(double logit);

// One flat view over a parameter tensor and its gradient.
struct TensorRef {
  double* value = nullptr;
  const double* grad = nullptr;
  std::size_t size = 0;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t step = 0;
  std::vector<std::vector<double>> m, v;
};

// Standard bias-corrected Adam update over the given tensors. Moments are
// allocated on first use; later calls must pass identical shapes.
void adam_step(AdamState& state, std::span<const TensorRef> tensors);

std::vector<TensorRef> bind_params(MlpStack& stack, const MlpGrads& grads);

struct EmbeddingTable {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  Matrix weights;  // vocab_size x dim
};

EmbeddingTable make_embedding_table(std::size_t vocab_size, std::size_t dim, Rng& rng);

// Row gather; indices must lie in [0, vocab_size).
Matrix embed_lookup(const EmbeddingTable& table, std::span<const int64_t> indices);

// Scatter-add of output-row gradients back onto the table.
Matrix embed_backward(const EmbeddingTable& table, std::span<const int64_t> indices,
                      const Matrix& grad_rows);

// Categorical-feature front end of a party model: one embedding table per
// categorical column; lookups are concatenated ahead of the continuous
// features.
struct FeatureEncoder {
  std::vector<EmbeddingTable> tables;

  std::size_t output_dim(std::size_t continuous_cols) const;
  Matrix assemble(const Matrix& continuous,
                  const std::vector<std::vector<int64_t>>& categorical) const;
  // Splits the assembled-input gradient into per-table gradients; the
  // trailing continuous block is discarded (raw features are not trained).
  std::vector<Matrix> backward(const std::vector<std::vector<int64_t>>& categorical,
                               const Matrix& grad_assembled) const;
};

// Flat checkpoint: magic, table and layer dims, then each parameter
// tensor as row-major little-endian 64-bit floats in declaration order.
void save_checkpoint(const std::string& path, const FeatureEncoder& encoder,
                     const MlpStack& stack);
void load_checkpoint(const std::string& path, FeatureEncoder& encoder, MlpStack& stack);

}  // namespace splitsim
