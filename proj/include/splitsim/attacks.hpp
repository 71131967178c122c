#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "splitsim/matrix.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

// How the attacker maps clusters to labels. by_size needs an imbalance
// assumption (smaller cluster = positive); by_score assumes nothing and
// marks the higher-score cluster positive.
enum class AssignmentRule : uint8_t { by_size = 0, by_score = 1 };

enum class LeakMode : uint8_t { scores = 0, hard_labels = 1 };

struct AttackPrior {
  AssignmentRule rule = AssignmentRule::by_size;
  std::optional<double> expected_positive_ratio;  // population-level side info
};

struct SpectralAttackResult {
  std::vector<double> scores;           // |<x - mean, v>| per row
  std::vector<double> oriented_scores;  // sign-corrected: higher = more positive
  std::vector<uint8_t> hard_labels;
  std::pair<std::size_t, std::size_t> cluster_sizes{0, 0};  // (negative, positive)
  std::optional<double> score_boundary;  // midpoint of the cluster centers
  bool positive_cluster_high = true;
  bool degenerate = false;  // attack abstained (collapsed spectrum or scores)
};

// Center by column mean, score each row by its absolute projection onto
// the top singular direction, cluster the scores with 1-D two-means and
// assign labels by the prior's rule. Degenerate inputs abstain (all-zero
// oriented scores, all-negative hard labels) instead of failing: a fully
// defended model legitimately produces collapsed embeddings.
SpectralAttackResult spectral_attack(const Matrix& activations, const AttackPrior& prior);

// Runs the attack per mini-batch of rows and concatenates the per-batch
// oriented scores; each batch is oriented against its own clustering. A
// short tail (< 4 rows) is merged into the preceding batch.
SpectralAttackResult spectral_attack_batched(const Matrix& activations,
                                             const AttackPrior& prior,
                                             std::size_t batch_size);

// Per-row L2 norms of a backpropagated-gradient payload; larger norm is
// read as more likely positive.
std::vector<double> norm_attack(const Matrix& grad);

// AUC of attack scores against the true labels. 0.5 is a blind guess.
double leak_auc(std::span<const double> attack_scores, std::span<const double> true_labels);

double leak_auc(const SpectralAttackResult& result, std::span<const double> true_labels,
                LeakMode mode);

// Two-component Gaussian mixture harness for the spectral-score
// separation guarantee: F = (1-eps) D + eps W with diagonal covariances.
struct MixtureSpec {
  std::vector<double> mu_d, mu_w;
  std::vector<double> var_d, var_w;  // per-coordinate variances
  double epsilon_mix = 0.1;          // weight of W, in (0, 1/2)
  double sigma2 = 1.0;               // bound on every coordinate variance
  std::size_t n = 0;

  // ||mu_d - mu_w||^2 >= 6 sigma^2 / eps
  bool separation_holds() const;
  void validate() const;
};

struct MixtureSample {
  Matrix points;
  std::vector<uint8_t> component;  // 1 = drawn from W
};

MixtureSample sample_mixture(const MixtureSpec& spec, Rng& rng);

}  // namespace splitsim
