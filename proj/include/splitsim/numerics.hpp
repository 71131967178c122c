#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "splitsim/matrix.hpp"
#include "splitsim/rng.hpp"

namespace splitsim {

// Dominant right singular direction of a centered sample matrix,
// equivalently the top eigenpair of its covariance (1/n) X^T X.
struct SpectralDecomposition {
  std::vector<double> top_singular_vector;  // unit length d
  double top_singular_value = 0.0;          // largest eigenvalue of (1/n) X^T X
};

// Deterministic 1-D two-means clustering outcome. Assignment 0 maps to
// the lower center.
struct Clustering {
  std::vector<uint8_t> assignments;
  double center_low = 0.0;
  double center_high = 0.0;
};

std::vector<double> column_mean(const Matrix& m);

// Power iteration on the d x d covariance of an already-centered matrix.
// Sign convention: the first component of the returned vector that
// exceeds 1e-12 in magnitude is nonnegative. Throws DegenerateSpectrum
// when the input is (numerically) all-zero.
SpectralDecomposition top_singular_vector(const Matrix& centered, double tol,
                                          std::size_t max_iter, Rng& rng);

// Rank-based (Mann-Whitney) AUC with ties counted 0.5. Exactly equal to
// O(n^2) pair counting. Labels must be 0/1 with both classes present.
double auc(std::span<const double> scores, std::span<const double> labels);

// 1-D two-means with centers initialized at min/max and Lloyd iterations
// until assignments are stable; distance ties break toward the lower
// center. Throws DegenerateScores when all scores coincide.
Clustering two_means_1d(std::span<const double> scores);

}  // namespace splitsim
