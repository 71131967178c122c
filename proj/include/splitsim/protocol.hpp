#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splitsim/data.hpp"
#include "splitsim/defenses.hpp"
#include "splitsim/matrix.hpp"
#include "splitsim/nn.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

enum class PartyId : uint8_t { non_label = 0, label = 1 };
enum class MessageKind : uint8_t { embedding = 0, gradient = 1 };

// The only two payloads that ever cross the party boundary.
struct EmbeddingMessage {
  uint64_t batch_id = 0;
  Matrix embedding;  // n x cut_dim
};

struct GradientMessage {
  uint64_t batch_id = 0;
  Matrix grad;  // same shape as the matching embedding
};

struct AuditRecord {
  PartyId sender;
  PartyId receiver;
  MessageKind kind;
  uint64_t batch_id;
  std::size_t rows;
  std::size_t cols;
};

// Ordered trace of everything that crossed the boundary. Embeddings may
// only flow non-label -> label and gradients label -> non-label; anything
// else is a violation.
class AuditLog {
 public:
  void record(PartyId sender, PartyId receiver, MessageKind kind, uint64_t batch_id,
              std::size_t rows, std::size_t cols) {
    records_.push_back({sender, receiver, kind, batch_id, rows, cols});
  }
  const std::vector<AuditRecord>& records() const { return records_; }
  std::size_t violation_count() const;

 private:
  std::vector<AuditRecord> records_;
};

// Owner of the raw features, the feature encoder and the extractor f.
// Never sees a label; consumes only GradientMessage payloads.
struct NonLabelParty {
  FeatureEncoder encoder;
  MlpStack f;
  AdamState opt;
  Rng rng{0};

  uint64_t next_batch_id = 1;
  bool awaiting_gradient = false;
  uint64_t inflight_batch_id = 0;
  std::vector<std::vector<int64_t>> inflight_categorical;

  // Honest-but-curious memory: the latest gradient payload as received,
  // kept for offline inspection. Never feeds back into training.
  Matrix last_gradient;
  uint64_t last_gradient_batch_id = 0;

  // Forward pass that opens a training step; caches activations for the
  // later backward pass.
  EmbeddingMessage begin_step(const Matrix& continuous,
                              const std::vector<std::vector<int64_t>>& categorical);
  // Applies the peer's gradient: backprop through f and the encoder, then
  // one Adam update. Must match the in-flight batch.
  void finish_step(const GradientMessage& msg);

  // Evaluation-mode embedding (no step bookkeeping). Rejected while a
  // training step is in flight since it would clobber the backward caches.
  Matrix eval_embedding(const Matrix& continuous,
                        const std::vector<std::vector<int64_t>>& categorical);
};

// Owner of the labels and the predictor h, plus all defense state.
// Never sees raw features; consumes only EmbeddingMessage payloads.
struct LabelParty {
  MlpStack h;
  AdamState opt;
  DefenseConfig defense;
  FlippedLabelStore flips;
  Rng rng{0};

  uint64_t last_batch_id = 0;

  struct StepOutcome {
    GradientMessage reply;
    double lc = 0.0;
    std::optional<double> ld;
    std::optional<double> dcor;
  };

  // Full label-party turn: defended labels, loss, backprop, h update and
  // the (possibly perturbed) gradient reply. Batch ids must increase.
  StepOutcome train_on_embedding(const EmbeddingMessage& msg,
                                 std::span<const double> labels,
                                 std::span<const std::size_t> example_indices);

  // Evaluation-mode positive-class probabilities.
  std::vector<double> predict(const Matrix& embedding);
};

struct StepReport {
  double lc = 0.0;
  std::optional<double> ld;
  std::optional<double> dcor;
};

// One alternating training turn over the message layer, audit-logged.
StepReport train_step(NonLabelParty& nl, LabelParty& lp, const Batch& batch, AuditLog& audit);

// Composite-model AUC on held-out data; always scored against true labels.
double evaluate(NonLabelParty& nl, LabelParty& lp, const Batch& test_set);

struct ActivationCapture {
  std::vector<Matrix> layers;  // one matrix per f layer, cut layer last
  std::vector<double> labels;  // experimenter-side ground truth
};

// Experimenter-side probe: every f-layer activation over a dataset plus
// the true labels. Nothing here crosses the party boundary.
ActivationCapture capture_activations(NonLabelParty& nl, const Batch& dataset);

}  // namespace splitsim
