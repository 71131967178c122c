#pragma once

#include <optional>
#include <span>
#include <unordered_map>

#include "splitsim/matrix.hpp"
#include "splitsim/nn.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

// Label-party defense knobs: weight of the distance-correlation loss,
// randomized-response label flipping, and isotropic gradient noise scaled
// to the batch's own gradient power.
struct DefenseConfig {
  double alpha_d = 0.0;
  std::optional<double> label_dp_epsilon;  // flip probability 1/(1+e^eps) when set
  double grad_noise_s = 0.0;
  double dcor_floor = 1e-8;

  void validate() const;
};

// e^eps / (1 + e^eps): probability that randomized response keeps the
// true label.
double rr_keep_probability(double epsilon);

// Binary randomized response; epsilon-label-DP for binary labels.
double randomized_response(double y, double epsilon, Rng& rng);

// Per-example memoized label flips, stable across epochs and independent
// of batch ordering: each index's flip is derived from key material drawn
// once from the label party's own randomness.
class FlippedLabelStore {
 public:
  void bind_key(Rng& label_party_rng) { key_ = label_party_rng.next_u64(); }

  // Identity when epsilon is absent; otherwise the memoized flipped label.
  double defended_label(std::size_t index, double true_y, std::optional<double> epsilon);

  std::size_t size() const { return flipped_.size(); }

 private:
  uint64_t key_ = 0;
  std::unordered_map<std::size_t, double> flipped_;
};

// g + N with N i.i.d. Gaussian per entry, std sqrt(s) * mean row norm /
// sqrt(d), so E||N_i||^2 = s * (mean ||g_i||)^2. s = 0 returns g
// unchanged without consuming randomness.
Matrix perturb_gradients(const Matrix& g, double s, Rng& rng);

struct LabelPartyGradient {
  Matrix payload;  // gradient message content, noise included
  MlpGrads h_grads;
  double lc = 0.0;
  std::optional<double> ld;
  std::optional<double> dcor;
};

// Full label-party step math for one batch: forward h on the received
// embedding, binary cross entropy on the effective labels, backprop
// through h, plus alpha_d times the dcor loss gradient on the same
// labels, then optional noise on the combined payload. A degenerate dcor
// batch drops the alpha_d term.
LabelPartyGradient combined_label_party_gradient(const Matrix& embedding,
                                                 std::span<const double> effective_labels,
                                                 MlpStack& h, const DefenseConfig& cfg,
                                                 Rng& noise_rng);

}  // namespace splitsim
