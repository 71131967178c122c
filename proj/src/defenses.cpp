#include "splitsim/defenses.hpp"

#include <cmath>

#include "splitsim/dcor.hpp"
#include "splitsim/errors.hpp"

namespace splitsim {

void DefenseConfig::validate() const {
  if (alpha_d < 0.0) throw ConfigError("alpha_d must be >= 0");
  if (label_dp_epsilon && *label_dp_epsilon <= 0.0) {
    throw ConfigError("label_dp_epsilon must be > 0 when set");
  }
  if (grad_noise_s < 0.0) throw ConfigError("grad_noise_s must be >= 0");
  if (dcor_floor <= 0.0) throw ConfigError("dcor_floor must be > 0");
}

double rr_keep_probability(double epsilon) {
  if (epsilon <= 0.0) throw InvalidArgument("randomized response needs epsilon > 0");
  // Written with a negated exponent so large epsilon cannot overflow.
  return 1.0 / (1.0 + std::exp(-epsilon));
}

double randomized_response(double y, double epsilon, Rng& rng) {
  if (y != 0.0 && y != 1.0) throw InvalidArgument("randomized_response: label must be 0 or 1");
  const double keep = rr_keep_probability(epsilon);
  return rng.uniform() < keep ? y : 1.0 - y;
}

double FlippedLabelStore::defended_label(std::size_t index, double true_y,
                                         std::optional<double> epsilon) {
  if (!epsilon) return true_y;
  const auto it = flipped_.find(index);
  if (it != flipped_.end()) return it->second;
  Rng per_index(derive_seed(key_, static_cast<uint64_t>(index)));
  const double flipped = randomized_response(true_y, *epsilon, per_index);
  flipped_.emplace(index, flipped);
  return flipped;
}

Matrix perturb_gradients(const Matrix& g, double s, Rng& rng) {
  if (s < 0.0) throw InvalidArgument("perturb_gradients: s must be >= 0");
  if (s == 0.0) return g;
  const std::size_t n = g.rows();
  const std::size_t d = g.cols();
  double mean_row_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (double v : g.row(i)) acc += v * v;
    mean_row_norm += std::sqrt(acc);
  }
  mean_row_norm /= static_cast<double>(n);
  const double sigma = std::sqrt(s) * mean_row_norm / std::sqrt(static_cast<double>(d));
  Matrix out = g;
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

LabelPartyGradient combined_label_party_gradient(const Matrix& embedding,
                                                 std::span<const double> effective_labels,
                                                 MlpStack& h, const DefenseConfig& cfg,
                                                 Rng& noise_rng) {
  if (embedding.rows() != effective_labels.size()) {
    throw ShapeMismatch("combined_label_party_gradient: batch size mismatch");
  }
  embedding.check_finite("label party embedding");

  const Matrix& logits = forward(h, embedding);
  if (logits.cols() != 1) {
    throw ShapeMismatch("label party predictor must end in a single logit");
  }
  std::vector<double> logit_col(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) logit_col[i] = logits(i, 0);
  const BceResult bce = bce_with_logits(logit_col, effective_labels);

  Matrix grad_logits(logits.rows(), 1);
  for (std::size_t i = 0; i < logits.rows(); ++i) grad_logits(i, 0) = bce.grad_logits[i];

  LabelPartyGradient result;
  result.lc = bce.loss;
  auto [h_grads, grad_embedding] = backward(h, grad_logits);
  result.h_grads = std::move(h_grads);
  result.payload = std::move(grad_embedding);

  if (cfg.alpha_d > 0.0) {
    try {
      const DcorResult dc = distance_correlation(embedding, effective_labels);
      result.dcor = dc.dcor;
      result.ld = std::log(std::max(dc.dcor, cfg.dcor_floor));
      const Matrix dcor_grad = dcor_loss_gradient(embedding, dc, cfg.dcor_floor);
      for (std::size_t i = 0; i < result.payload.data().size(); ++i) {
        result.payload.data()[i] += cfg.alpha_d * dcor_grad.data()[i];
      }
    } catch (const DegenerateLabels&) {
      // Single-class batch: skip the defense term, keep the task gradient.
    } catch (const DegenerateEmbeddings&) {
      // Collapsed embedding batch: nothing left to decorrelate.
    }
  }

  if (cfg.grad_noise_s > 0.0) {
    result.payload = perturb_gradients(result.payload, cfg.grad_noise_s, noise_rng);
  }
  return result;
}

}  // namespace splitsim
