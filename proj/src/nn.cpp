#include "splitsim/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <tuple>
#include <utility>

#include "splitsim/errors.hpp"

namespace splitsim {

void add_layer(MlpStack& stack, std::size_t in_dim, std::size_t out_dim,
               Activation act, Rng& rng) {
  if (!stack.layers.empty() && stack.layers.back().weight.cols() != in_dim) {
    throw ShapeMismatch("add_layer: dimension does not chain");
  }
  DenseLayer layer;
  layer.weight = Matrix(in_dim, out_dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (double& w : layer.weight.data()) w = rng.uniform_in(-bound, bound);
  layer.bias.assign(out_dim, 0.0);
  layer.activation = act;
  stack.layers.push_back(std::move(layer));
  stack.has_cache = false;
}

MlpStack make_mlp(std::size_t input_dim, std::span<const std::size_t> widths,
                  Activation hidden, Activation output, Rng& rng) {
  if (widths.empty()) throw InvalidArgument("make_mlp: at least one layer required");
  MlpStack stack;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const Activation act = (i + 1 == widths.size()) ? output : hidden;
    add_layer(stack, in, widths[i], act, rng);
    in = widths[i];
  }
  return stack;
}

const Matrix& forward(MlpStack& stack, const Matrix& input) {
  if (stack.layers.empty()) throw InvalidArgument("forward on empty stack");
  if (input.cols() != stack.input_dim()) {
    throw ShapeMismatch("forward: input width " + std::to_string(input.cols()) +
                        " != layer in-dim " + std::to_string(stack.input_dim()));
  }
  input.check_finite("forward input");
  stack.cached_input = input;
  stack.activations.clear();
  stack.activations.reserve(stack.layers.size());
  const Matrix* current = &stack.cached_input;
  for (const DenseLayer& layer : stack.layers) {
    Matrix z = matmul(*current, layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < z.cols(); ++j) {
        row[j] += layer.bias[j];
        if (layer.activation == Activation::relu && row[j] < 0.0) row[j] = 0.0;
      }
    }
    stack.activations.push_back(std::move(z));
    current = &stack.activations.back();
  }
  stack.has_cache = true;
  return stack.activations.back();
}

std::pair<MlpGrads, Matrix> backward(MlpStack& stack, const Matrix& grad_output) {
  if (!stack.has_cache) throw StaleCache("backward without a forward pass");
  if (grad_output.rows() != stack.cached_input.rows() ||
      grad_output.cols() != stack.output_dim()) {
    throw StaleCache("backward: gradient shape does not match cached forward batch");
  }

  const std::size_t L = stack.layers.size();
  MlpGrads grads;
  grads.weight.resize(L);
  grads.bias.resize(L);

  Matrix delta = grad_output;
  for (std::size_t li = L; li-- > 0;) {
    const DenseLayer& layer = stack.layers[li];
    const Matrix& out = stack.activations[li];
    if (layer.activation == Activation::relu) {
      // out > 0 iff the pre-activation was positive; subgradient 0 at 0.
      for (std::size_t i = 0; i < delta.rows(); ++i) {
        auto drow = delta.row(i);
        const auto orow = out.row(i);
        for (std::size_t j = 0; j < delta.cols(); ++j) {
          if (orow[j] <= 0.0) drow[j] = 0.0;
        }
      }
    }
    const Matrix& layer_input = (li == 0) ? stack.cached_input : stack.activations[li - 1];
    grads.weight[li] = matmul_transpose_a(layer_input, delta);
    auto& bias_grad = grads.bias[li];
    bias_grad.assign(layer.bias.size(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto drow = delta.row(i);
      for (std::size_t j = 0; j < delta.cols(); ++j) bias_grad[j] += drow[j];
    }
    delta = matmul_transpose_b(delta, layer.weight);
  }
  return {std::move(grads), std::move(delta)};
}

double sigmoid(double logit) {
  if (logit >= 0.0) {
    return 1.0 / (1.0 + std::exp(-logit));
  }
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) throw ShapeMismatch("bce: logit/label lengths differ");
  if (logits.empty()) throw InvalidArgument("bce: empty batch");
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  BceResult res;
  res.grad_logits.resize(logits.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double l = logits[i];
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw InvalidArgument("bce: labels must be 0 or 1");
    // max(l,0) - l*y + log(1 + exp(-|l|))
    acc += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
    res.grad_logits[i] = (sigmoid(l) - y) * inv_n;
  }
  res.loss = acc * inv_n;
  return res;
}

void adam_step(AdamState& state, std::span<const TensorRef> tensors) {
  if (state.m.empty()) {
    state.m.resize(tensors.size());
    state.v.resize(tensors.size());
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      state.m[t].assign(tensors[t].size, 0.0);
      state.v[t].assign(tensors[t].size, 0.0);
    }
  }
  if (state.m.size() != tensors.size()) throw ShapeMismatch("adam_step: tensor count changed");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const TensorRef& ref = tensors[t];
    if (state.m[t].size() != ref.size) throw ShapeMismatch("adam_step: tensor shape changed");
    double* m = state.m[t].data();
    double* v = state.v[t].data();
    for (std::size_t i = 0; i < ref.size; ++i) {
      const double g = ref.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      ref.value[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

std::vector<TensorRef> bind_params(MlpStack& stack, const MlpGrads& grads) {
  if (grads.weight.size() != stack.layers.size()) {
    throw ShapeMismatch("bind_params: gradient layer count mismatch");
  }
  std::vector<TensorRef> refs;
  refs.reserve(stack.layers.size() * 2);
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    DenseLayer& layer = stack.layers[i];
    refs.push_back({layer.weight.data().data(), grads.weight[i].data().data(),
                    layer.weight.data().size()});
    refs.push_back({layer.bias.data(), grads.bias[i].data(), layer.bias.size()});
  }
  return refs;
}

EmbeddingTable make_embedding_table(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  EmbeddingTable table;
  table.vocab_size = vocab_size;
  table.dim = dim;
  table.weights = Matrix(vocab_size, dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(vocab_size + dim));
  for (double& w : table.weights.data()) w = rng.uniform_in(-bound, bound);
  return table;
}

Matrix embed_lookup(const EmbeddingTable& table, std::span<const int64_t> indices) {
  Matrix out(indices.size(), table.dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int64_t idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.vocab_size) {
      throw IndexOutOfRange("embed_lookup: index " + std::to_string(idx) +
                            " outside vocab of " + std::to_string(table.vocab_size));
    }
    const auto src = table.weights.row(static_cast<std::size_t>(idx));
    auto dst = out.row(i);
    for (std::size_t j = 0; j < table.dim; ++j) dst[j] = src[j];
  }
  return out;
}

Matrix embed_backward(const EmbeddingTable& table, std::span<const int64_t> indices,
                      const Matrix& grad_rows) {
  if (grad_rows.rows() != indices.size() || grad_rows.cols() != table.dim) {
    throw ShapeMismatch("embed_backward: gradient shape mismatch");
  }
  Matrix grad(table.vocab_size, table.dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int64_t idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.vocab_size) {
      throw IndexOutOfRange("embed_backward: index outside vocab");
    }
    auto dst = grad.row(static_cast<std::size_t>(idx));
    const auto src = grad_rows.row(i);
    for (std::size_t j = 0; j < table.dim; ++j) dst[j] += src[j];
  }
  return grad;
}

std::size_t FeatureEncoder::output_dim(std::size_t continuous_cols) const {
  std::size_t dim = continuous_cols;
  for (const auto& t : tables) dim += t.dim;
  return dim;
}

Matrix FeatureEncoder::assemble(const Matrix& continuous,
                                const std::vector<std::vector<int64_t>>& categorical) const {
  if (categorical.size() != tables.size()) {
    throw ShapeMismatch("assemble: categorical column count != table count");
  }
  const std::size_t n =
      tables.empty() ? continuous.rows() : categorical.front().size();
  if (!tables.empty() && continuous.rows() != 0 && continuous.rows() != n) {
    throw ShapeMismatch("assemble: continuous/categorical row counts differ");
  }
  Matrix out(n, output_dim(continuous.cols()));
  std::size_t col = 0;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (categorical[t].size() != n) throw ShapeMismatch("assemble: ragged categorical column");
    const Matrix emb = embed_lookup(tables[t], categorical[t]);
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = emb.row(i);
      auto dst = out.row(i);
      for (std::size_t j = 0; j < tables[t].dim; ++j) dst[col + j] = src[j];
    }
    col += tables[t].dim;
  }
  for (std::size_t i = 0; i < continuous.rows(); ++i) {
    const auto src = continuous.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < continuous.cols(); ++j) dst[col + j] = src[j];
  }
  return out;
}

std::vector<Matrix> FeatureEncoder::backward(
    const std::vector<std::vector<int64_t>>& categorical, const Matrix& grad_assembled) const {
  std::vector<Matrix> table_grads;
  table_grads.reserve(tables.size());
  std::size_t col = 0;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    Matrix slice(grad_assembled.rows(), tables[t].dim);
    for (std::size_t i = 0; i < grad_assembled.rows(); ++i) {
      const auto src = grad_assembled.row(i);
      auto dst = slice.row(i);
      for (std::size_t j = 0; j < tables[t].dim; ++j) dst[j] = src[col + j];
    }
    table_grads.push_back(embed_backward(tables[t], categorical[t], slice));
    col += tables[t].dim;
  }
  return table_grads;
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'P', 'L', 'T', 'N', 'N', '0', '1'};

uint64_t to_little_endian(uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (i * 8)) & 0xffULL) << ((7 - i) * 8);
    return y;
  }
  return x;
}

void write_u64(std::ofstream& out, uint64_t x) {
  const uint64_t le = to_little_endian(x);
  out.write(reinterpret_cast<const char*>(&le), sizeof(le));
}

uint64_t read_u64(std::ifstream& in) {
  uint64_t le = 0;
  in.read(reinterpret_cast<char*>(&le), sizeof(le));
  return to_little_endian(le);
}

void write_doubles(std::ofstream& out, std::span<const double> values) {
  for (double v : values) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(out, bits);
  }
}

void read_doubles(std::ifstream& in, std::span<double> values) {
  for (double& v : values) {
    const uint64_t bits = read_u64(in);
    std::memcpy(&v, &bits, sizeof(v));
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const FeatureEncoder& encoder,
                     const MlpStack& stack) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u64(out, encoder.tables.size());
  for (const auto& t : encoder.tables) {
    write_u64(out, t.vocab_size);
    write_u64(out, t.dim);
  }
  write_u64(out, stack.layers.size());
  for (const auto& layer : stack.layers) {
    write_u64(out, layer.weight.rows());
    write_u64(out, layer.weight.cols());
    write_u64(out, static_cast<uint64_t>(layer.activation));
  }
  for (const auto& t : encoder.tables) write_doubles(out, t.weights.data());
  for (const auto& layer : stack.layers) {
    write_doubles(out, layer.weight.data());
    write_doubles(out, layer.bias);
  }
  if (!out) throw IoError("short write on checkpoint: " + path);
}

void load_checkpoint(const std::string& path, FeatureEncoder& encoder, MlpStack& stack) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("bad checkpoint magic: " + path);
  }
  encoder.tables.clear();
  const uint64_t n_tables = read_u64(in);
  std::vector<std::pair<uint64_t, uint64_t>> table_dims;
  for (uint64_t t = 0; t < n_tables; ++t) {
    const uint64_t vocab = read_u64(in);
    const uint64_t dim = read_u64(in);
    table_dims.emplace_back(vocab, dim);
  }
  stack.layers.clear();
  stack.has_cache = false;
  const uint64_t n_layers = read_u64(in);
  std::vector<std::tuple<uint64_t, uint64_t, uint64_t>> layer_dims;
  for (uint64_t l = 0; l < n_layers; ++l) {
    const uint64_t rows = read_u64(in);
    const uint64_t cols = read_u64(in);
    const uint64_t act = read_u64(in);
    if (act > 1) throw IoError("bad activation tag in checkpoint");
    layer_dims.emplace_back(rows, cols, act);
  }
  for (const auto& [vocab, dim] : table_dims) {
    EmbeddingTable t;
    t.vocab_size = vocab;
    t.dim = dim;
    t.weights = Matrix(vocab, dim);
    read_doubles(in, t.weights.data());
    encoder.tables.push_back(std::move(t));
  }
  for (const auto& [rows, cols, act] : layer_dims) {
    DenseLayer layer;
    layer.weight = Matrix(rows, cols);
    layer.bias.assign(cols, 0.0);
    layer.activation = static_cast<Activation>(act);
    read_doubles(in, layer.weight.data());
    read_doubles(in, layer.bias);
    stack.layers.push_back(std::move(layer));
  }
  if (!in) throw IoError("truncated checkpoint: " + path);
}

}  // namespace splitsim
