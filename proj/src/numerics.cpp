#include "splitsim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "splitsim/errors.hpp"

namespace splitsim {

std::vector<double> column_mean(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidArgument("column_mean of empty matrix");
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(m.rows());
  for (double& v : mean) v *= inv_n;
  return mean;
}

namespace {

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// y = S * x for a symmetric matrix stored densely.
void symmetric_matvec(const Matrix& s, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto row = s.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void apply_sign_convention(std::vector<double>& v) {
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0) {
        for (double& e : v) e = -e;
      }
      return;
    }
  }
}

}  // namespace

SpectralDecomposition top_singular_vector(const Matrix& centered, double tol,
                                          std::size_t max_iter, Rng& rng) {
  if (max_iter < 1) throw InvalidArgument("top_singular_vector: max_iter must be >= 1");
  const std::size_t n = centered.rows();
  const std::size_t d = centered.cols();
  if (n == 0 || d == 0) throw InvalidArgument("top_singular_vector of empty matrix");

  // Covariance S = (1/n) X^T X, symmetric PSD.
  Matrix cov = matmul_transpose_a(centered, centered);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : cov.data()) v *= inv_n;

  // For PSD matrices trace >= spectral norm, so a vanishing trace means a
  // vanishing spectrum.
  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += cov(j, j);
  if (!(trace >= 1e-12)) {
    throw DegenerateSpectrum("top_singular_vector: input has no spectral mass");
  }

  std::vector<double> v(d), w(d);
  double vnorm = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    vnorm = norm2(v);
  } while (vnorm < 1e-12);
  for (double& x : v) x /= vnorm;

  double value = 0.0;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    symmetric_matvec(cov, v, w);
    const double wnorm = norm2(w);
    if (wnorm < 1e-300) {
      // Start vector fell into the null space; re-randomize.
      do {
        for (double& x : v) x = rng.normal();
        vnorm = norm2(v);
      } while (vnorm < 1e-12);
      for (double& x : v) x /= vnorm;
      continue;
    }
    // Rayleigh quotient and residual for the current iterate.
    double lambda = 0.0;
    for (std::size_t j = 0; j < d; ++j) lambda += v[j] * w[j];
    double resid = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = w[j] - lambda * v[j];
      resid += r * r;
    }
    if (std::sqrt(resid) <= tol) {
      value = lambda;
      break;
    }
    for (std::size_t j = 0; j < d; ++j) v[j] = w[j] / wnorm;
    value = wnorm;
  }

  apply_sign_convention(v);
  return SpectralDecomposition{std::move(v), value};
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatch("auc: score/label lengths differ");
  const std::size_t n = scores.size();
  if (n < 2) throw InvalidArgument("auc needs at least 2 samples");

  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("auc: non-finite score");
  }
  std::size_t positives = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw InvalidArgument("auc: labels must be 0 or 1");
    if (y == 1.0) ++positives;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw SingleClass("auc: only one class present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Accumulate in half-units so every partial sum is an exact integer:
  // 2 per (positive above negative) pair, 1 per tied pair.
  double numerator_halves = 0.0;
  std::size_t neg_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::size_t pos_in_group = 0, neg_in_group = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1.0) ++pos_in_group; else ++neg_in_group;
      ++j;
    }
    numerator_halves += 2.0 * static_cast<double>(pos_in_group) * static_cast<double>(neg_below);
    numerator_halves += static_cast<double>(pos_in_group) * static_cast<double>(neg_in_group);
    neg_below += neg_in_group;
    i = j;
  }
  return numerator_halves /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

Clustering two_means_1d(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw InvalidArgument("two_means_1d needs at least 2 scores");
  const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
  if (*mx_it - *mn_it < 1e-12) throw DegenerateScores("two_means_1d: all scores coincide");

  // The optimal 1-D two-means partition is contiguous in sorted order, so
  // the exact minimizer falls out of a prefix-sum scan over the n-1 cut
  // positions. The result is a Lloyd fixed point of the min/max-seeded
  // iteration; plain Lloyd can stall in local optima and would break the
  // exact-SSE contract.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] < scores[b] : a < b;
  });

  std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores[order[i]];
    prefix_sum[i + 1] = prefix_sum[i] + s;
    prefix_sq[i + 1] = prefix_sq[i] + s * s;
  }
  const double total_sum = prefix_sum[n];
  const double total_sq = prefix_sq[n];

  double best_sse = 0.0;
  std::size_t best_split = 0;
  for (std::size_t split = 1; split < n; ++split) {
    const double n0 = static_cast<double>(split);
    const double n1 = static_cast<double>(n - split);
    const double sse = (prefix_sq[split] - prefix_sum[split] * prefix_sum[split] / n0) +
                       (total_sq - prefix_sq[split] -
                        (total_sum - prefix_sum[split]) * (total_sum - prefix_sum[split]) / n1);
    // On an exact tie the later cut wins: the boundary score joins the
    // lower cluster, matching the tie-toward-lower-center rule.
    if (split == 1 || sse <= best_sse) {
      best_sse = sse;
      best_split = split;
    }
  }

  Clustering result;
  result.assignments.assign(n, 0);
  for (std::size_t i = best_split; i < n; ++i) result.assignments[order[i]] = 1;
  result.center_low = prefix_sum[best_split] / static_cast<double>(best_split);
  result.center_high = (total_sum - prefix_sum[best_split]) / static_cast<double>(n - best_split);
  return result;
}

}  // namespace splitsim
