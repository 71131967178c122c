#include "splitsim/protocol.hpp"

#include <string>

#include "splitsim/errors.hpp"
#include "splitsim/numerics.hpp"

namespace splitsim {

std::size_t AuditLog::violation_count() const {
  std::size_t violations = 0;
  for (const AuditRecord& r : records_) {
    const bool ok_embedding = r.kind == MessageKind::embedding &&
                              r.sender == PartyId::non_label && r.receiver == PartyId::label;
    const bool ok_gradient = r.kind == MessageKind::gradient &&
                             r.sender == PartyId::label && r.receiver == PartyId::non_label;
    if (!ok_embedding && !ok_gradient) ++violations;
  }
  return violations;
}

EmbeddingMessage NonLabelParty::begin_step(
    const Matrix& continuous, const std::vector<std::vector<int64_t>>& categorical) {
  if (awaiting_gradient) {
    throw ProtocolError("begin_step while a previous step awaits its gradient");
  }
  const Matrix assembled = encoder.assemble(continuous, categorical);
  const Matrix& embedding = forward(f, assembled);
  awaiting_gradient = true;
  inflight_batch_id = next_batch_id++;
  inflight_categorical = categorical;
  return EmbeddingMessage{inflight_batch_id, embedding};
}

void NonLabelParty::finish_step(const GradientMessage& msg) {
  if (!awaiting_gradient) throw ProtocolError("gradient received with no step in flight");
  if (msg.batch_id != inflight_batch_id) {
    throw ProtocolError("out-of-order gradient: expected batch " +
                        std::to_string(inflight_batch_id) + ", got " +
                        std::to_string(msg.batch_id));
  }
  msg.grad.check_finite("gradient message");
  last_gradient = msg.grad;
  last_gradient_batch_id = msg.batch_id;
  auto [f_grads, grad_assembled] = backward(f, msg.grad);
  const std::vector<Matrix> table_grads = encoder.backward(inflight_categorical, grad_assembled);

  std::vector<TensorRef> refs;
  refs.reserve(encoder.tables.size() + f.layers.size() * 2);
  for (std::size_t t = 0; t < encoder.tables.size(); ++t) {
    refs.push_back({encoder.tables[t].weights.data().data(),
                    table_grads[t].data().data(), table_grads[t].data().size()});
  }
  const auto layer_refs = bind_params(f, f_grads);
  refs.insert(refs.end(), layer_refs.begin(), layer_refs.end());
  adam_step(opt, refs);
  awaiting_gradient = false;
}

Matrix NonLabelParty::eval_embedding(
    const Matrix& continuous, const std::vector<std::vector<int64_t>>& categorical) {
  if (awaiting_gradient) {
    throw ProtocolError("eval_embedding while a training step is in flight");
  }
  const Matrix assembled = encoder.assemble(continuous, categorical);
  return forward(f, assembled);
}

LabelParty::StepOutcome LabelParty::train_on_embedding(
    const EmbeddingMessage& msg, std::span<const double> labels,
    std::span<const std::size_t> example_indices) {
  if (msg.batch_id <= last_batch_id) {
    throw ProtocolError("out-of-order embedding: batch " + std::to_string(msg.batch_id) +
                        " after " + std::to_string(last_batch_id));
  }
  last_batch_id = msg.batch_id;
  if (labels.size() != msg.embedding.rows() || labels.size() != example_indices.size()) {
    throw ShapeMismatch("label party: batch size mismatch");
  }
  if (labels.size() < 2) throw InvalidArgument("label party: batch size must be >= 2");

  std::vector<double> effective(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    effective[i] = flips.defended_label(example_indices[i], labels[i], defense.label_dp_epsilon);
  }

  LabelPartyGradient combined =
      combined_label_party_gradient(msg.embedding, effective, h, defense, rng);

  const auto refs = bind_params(h, combined.h_grads);
  adam_step(opt, refs);

  StepOutcome outcome;
  outcome.reply = GradientMessage{msg.batch_id, std::move(combined.payload)};
  outcome.lc = combined.lc;
  outcome.ld = combined.ld;
  outcome.dcor = combined.dcor;
  return outcome;
}

std::vector<double> LabelParty::predict(const Matrix& embedding) {
  const Matrix& logits = forward(h, embedding);
  std::vector<double> proba(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) proba[i] = sigmoid(logits(i, 0));
  return proba;
}

StepReport train_step(NonLabelParty& nl, LabelParty& lp, const Batch& batch, AuditLog& audit) {
  if (batch.size() < 2) throw InvalidArgument("train_step: batch size must be >= 2");
  batch.continuous.check_finite("train batch features");

  EmbeddingMessage emb = nl.begin_step(batch.continuous, batch.categorical);
  audit.record(PartyId::non_label, PartyId::label, MessageKind::embedding, emb.batch_id,
               emb.embedding.rows(), emb.embedding.cols());

  LabelParty::StepOutcome outcome =
      lp.train_on_embedding(emb, batch.labels, batch.example_indices);
  audit.record(PartyId::label, PartyId::non_label, MessageKind::gradient,
               outcome.reply.batch_id, outcome.reply.grad.rows(), outcome.reply.grad.cols());

  nl.finish_step(outcome.reply);
  return StepReport{outcome.lc, outcome.ld, outcome.dcor};
}

double evaluate(NonLabelParty& nl, LabelParty& lp, const Batch& test_set) {
  if (test_set.size() < 2) throw InvalidArgument("evaluate: test set too small");
  const Matrix embedding = nl.eval_embedding(test_set.continuous, test_set.categorical);
  const std::vector<double> proba = lp.predict(embedding);
  return auc(proba, test_set.labels);
}

ActivationCapture capture_activations(NonLabelParty& nl, const Batch& dataset) {
  if (dataset.size() == 0) throw InvalidArgument("capture_activations: empty dataset");
  nl.eval_embedding(dataset.continuous, dataset.categorical);
  ActivationCapture capture;
  capture.layers = nl.f.activations;  // copies: layer 1 first, cut layer last
  capture.labels = dataset.labels;
  return capture;
}

}  // namespace splitsim
