#include "splitsim/attacks.hpp"

#include <cmath>

#include "splitsim/errors.hpp"
#include "splitsim/numerics.hpp"

namespace splitsim {

namespace {

// Fixed start-vector seed keeps the attack a pure function of its input.
constexpr uint64_t kAttackSeed = 0x5eedbead5eedbeadULL;

SpectralAttackResult abstain(std::size_t n) {
  SpectralAttackResult res;
  res.scores.assign(n, 0.0);
  res.oriented_scores.assign(n, 0.0);
  res.hard_labels.assign(n, 0);
  res.cluster_sizes = {n, 0};
  res.degenerate = true;
  return res;
}

}  // namespace

SpectralAttackResult spectral_attack(const Matrix& activations, const AttackPrior& prior) {
  const std::size_t n = activations.rows();
  if (n < 4) throw InvalidArgument("spectral_attack needs at least 4 rows");
  activations.check_finite("spectral_attack activations");

  const std::vector<double> mean = column_mean(activations);
  Matrix centered = activations;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = centered.row(i);
    for (std::size_t j = 0; j < centered.cols(); ++j) row[j] -= mean[j];
  }

  Rng attack_rng(kAttackSeed);
  SpectralDecomposition spectral;
  try {
    spectral = top_singular_vector(centered, 1e-9, 1000, attack_rng);
  } catch (const DegenerateSpectrum&) {
    return abstain(n);
  }

  SpectralAttackResult res;
  res.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = centered.row(i);
    double proj = 0.0;
    for (std::size_t j = 0; j < centered.cols(); ++j) {
      proj += row[j] * spectral.top_singular_vector[j];
    }
    res.scores[i] = std::abs(proj);
  }

  Clustering clusters;
  try {
    clusters = two_means_1d(res.scores);
  } catch (const DegenerateScores&) {
    return abstain(n);
  }

  std::size_t low_count = 0;
  for (uint8_t a : clusters.assignments) low_count += (a == 0);
  const std::size_t high_count = n - low_count;

  // Which cluster gets the positive label.
  uint8_t positive_cluster;
  if (prior.rule == AssignmentRule::by_score) {
    positive_cluster = 1;  // larger scores
  } else {
    // Smaller cluster is positive; on a tie the lower-score cluster is.
    positive_cluster = low_count > high_count ? 1 : 0;
  }

  res.hard_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.hard_labels[i] = clusters.assignments[i] == positive_cluster ? 1 : 0;
  }
  res.positive_cluster_high = positive_cluster == 1;
  res.oriented_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.oriented_scores[i] = res.positive_cluster_high ? res.scores[i] : -res.scores[i];
  }
  const std::size_t positive_count = positive_cluster == 0 ? low_count : high_count;
  res.cluster_sizes = {n - positive_count, positive_count};
  res.score_boundary = 0.5 * (clusters.center_low + clusters.center_high);
  return res;
}

SpectralAttackResult spectral_attack_batched(const Matrix& activations,
                                             const AttackPrior& prior,
                                             std::size_t batch_size) {
  const std::size_t n = activations.rows();
  if (batch_size < 4) throw InvalidArgument("spectral_attack_batched: batch_size must be >= 4");
  if (n < 4) throw InvalidArgument("spectral_attack_batched needs at least 4 rows");

  SpectralAttackResult agg;
  agg.scores.reserve(n);
  agg.oriented_scores.reserve(n);
  agg.hard_labels.reserve(n);
  agg.degenerate = true;

  std::size_t start = 0;
  while (start < n) {
    std::size_t end = std::min(start + batch_size, n);
    if (n - end < 4 && end < n) end = n;  // merge a short tail
    Matrix block(end - start, activations.cols());
    for (std::size_t i = start; i < end; ++i) {
      const auto src = activations.row(i);
      auto dst = block.row(i - start);
      for (std::size_t j = 0; j < activations.cols(); ++j) dst[j] = src[j];
    }
    const SpectralAttackResult part = spectral_attack(block, prior);
    agg.scores.insert(agg.scores.end(), part.scores.begin(), part.scores.end());
    agg.oriented_scores.insert(agg.oriented_scores.end(), part.oriented_scores.begin(),
                               part.oriented_scores.end());
    agg.hard_labels.insert(agg.hard_labels.end(), part.hard_labels.begin(),
                           part.hard_labels.end());
    agg.degenerate = agg.degenerate && part.degenerate;
    start = end;
  }

  std::size_t positives = 0;
  for (uint8_t h : agg.hard_labels) positives += h;
  agg.cluster_sizes = {n - positives, positives};
  return agg;
}

std::vector<double> norm_attack(const Matrix& grad) {
  if (grad.rows() < 2) throw InvalidArgument("norm_attack needs at least 2 rows");
  std::vector<double> norms(grad.rows());
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    double acc = 0.0;
    for (double v : grad.row(i)) acc += v * v;
    norms[i] = std::sqrt(acc);
  }
  return norms;
}

double leak_auc(std::span<const double> attack_scores, std::span<const double> true_labels) {
  return auc(attack_scores, true_labels);
}

double leak_auc(const SpectralAttackResult& result, std::span<const double> true_labels,
                LeakMode mode) {
  if (mode == LeakMode::scores) {
    return auc(result.oriented_scores, true_labels);
  }
  std::vector<double> hard(result.hard_labels.size());
  for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = result.hard_labels[i];
  return auc(hard, true_labels);
}

bool MixtureSpec::separation_holds() const {
  double dist2 = 0.0;
  for (std::size_t j = 0; j < mu_d.size(); ++j) {
    const double diff = mu_d[j] - mu_w[j];
    dist2 += diff * diff;
  }
  return dist2 >= 6.0 * sigma2 / epsilon_mix;
}

void MixtureSpec::validate() const {
  if (mu_d.empty() || mu_d.size() != mu_w.size() || mu_d.size() != var_d.size() ||
      mu_d.size() != var_w.size()) {
    throw ShapeMismatch("MixtureSpec: dimension mismatch");
  }
  if (!(epsilon_mix > 0.0 && epsilon_mix < 0.5)) {
    throw InvalidArgument("MixtureSpec: epsilon_mix must lie in (0, 1/2)");
  }
  if (sigma2 <= 0.0) throw InvalidArgument("MixtureSpec: sigma2 must be > 0");
  for (std::size_t j = 0; j < var_d.size(); ++j) {
    if (var_d[j] < 0.0 || var_w[j] < 0.0 || var_d[j] > sigma2 || var_w[j] > sigma2) {
      throw InvalidArgument("MixtureSpec: coordinate variances must lie in [0, sigma2]");
    }
  }
  if (n < 4) throw InvalidArgument("MixtureSpec: n must be >= 4");
}

MixtureSample sample_mixture(const MixtureSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t d = spec.mu_d.size();
  MixtureSample sample;
  sample.points = Matrix(spec.n, d);
  sample.component.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const bool from_w = rng.bernoulli(spec.epsilon_mix);
    sample.component[i] = from_w ? 1 : 0;
    const auto& mu = from_w ? spec.mu_w : spec.mu_d;
    const auto& var = from_w ? spec.var_w : spec.var_d;
    auto row = sample.points.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = mu[j] + std::sqrt(var[j]) * rng.normal();
    }
  }
  return sample;
}

}  // namespace splitsim
