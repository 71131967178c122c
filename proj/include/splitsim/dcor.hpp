#pragma once

#include <span>

#include "splitsim/matrix.hpp"

namespace splitsim {

// Intermediates of one distance-correlation evaluation: pairwise distance
// matrices over embedding rows (s) and labels (t), their doubly centered
// forms (a, b) and the three squared distance covariances.
struct DcorWorkspace {
  Matrix s, t, a, b;
  double dcov2_xy = 0.0;
  double dcov2_xx = 0.0;
  double dcov2_yy = 0.0;
};

struct DcorResult {
  double dcor = 0.0;  // dCov^2(X,Y) / sqrt(dCov^2(X,X) * dCov^2(Y,Y)), in [0,1]
  DcorWorkspace workspace;
};

// Exact O(n^2) distance correlation between an n x d embedding batch and
// its n labels. Throws DegenerateLabels when all labels are equal and
// DegenerateEmbeddings when all rows are identical.
DcorResult distance_correlation(const Matrix& embeddings, std::span<const double> labels);

// log(max(dcor, floor)); the floor keeps the loss finite as the
// correlation collapses. Degenerate errors propagate.
double dcor_loss(const Matrix& embeddings, std::span<const double> labels, double floor);

// Gradient of dcor_loss with respect to every embedding entry, by chain
// rule through distances -> double centering -> covariances -> log.
// Returns an all-zero matrix when dcor is clamped at the floor or the
// batch is degenerate (the defense skips such batches); contributions of
// coincident row pairs are zero (subgradient choice at the distance kink).
Matrix dcor_loss_gradient(const Matrix& embeddings, std::span<const double> labels, double floor);

// Same gradient from an already computed workspace for these embeddings.
Matrix dcor_loss_gradient(const Matrix& embeddings, const DcorResult& result, double floor);

}  // namespace splitsim
