#include "splitsim/dcor.hpp"

#include <cmath>
#include <vector>

#include "splitsim/errors.hpp"

namespace splitsim {

namespace {

// A_{jk} = s_{jk} - rowmean_j - colmean_k + grandmean, in place into `out`.
void double_center(const Matrix& s, Matrix& out) {
  const std::size_t n = s.rows();
  std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = s.row(j);
    for (std::size_t k = 0; k < n; ++k) {
      row_mean[j] += row[k];
      col_mean[k] += row[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    row_mean[j] *= inv_n;
    grand += col_mean[j];
    col_mean[j] *= inv_n;
  }
  grand *= inv_n * inv_n;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      out(j, k) = s(j, k) - row_mean[j] - col_mean[k] + grand;
    }
  }
}

double mean_elementwise_product(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) acc += ad[i] * bd[i];
  return acc / static_cast<double>(a.rows() * a.rows());
}

bool all_rows_identical(const Matrix& m) {
  for (std::size_t i = 1; i < m.rows(); ++i) {
    const auto first = m.row(0);
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (row[j] != first[j]) return false;
    }
  }
  return true;
}

bool all_labels_equal(std::span<const double> labels) {
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] != labels[0]) return false;
  }
  return true;
}

}  // namespace

DcorResult distance_correlation(const Matrix& embeddings, std::span<const double> labels) {
  const std::size_t n = embeddings.rows();
  if (n < 2) throw InvalidArgument("distance_correlation needs n >= 2");
  if (labels.size() != n) throw ShapeMismatch("distance_correlation: label count mismatch");
  embeddings.check_finite("distance_correlation embeddings");
  if (all_labels_equal(labels)) {
    throw DegenerateLabels("distance_correlation: all labels equal");
  }
  if (all_rows_identical(embeddings)) {
    throw DegenerateEmbeddings("distance_correlation: all embedding rows identical");
  }

  DcorResult res;
  DcorWorkspace& ws = res.workspace;
  ws.s = Matrix(n, n);
  ws.t = Matrix(n, n);
  const std::size_t d = embeddings.cols();
  for (std::size_t j = 0; j < n; ++j) {
    const auto xj = embeddings.row(j);
    for (std::size_t k = j + 1; k < n; ++k) {
      const auto xk = embeddings.row(k);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = xj[c] - xk[c];
        acc += diff * diff;
      }
      const double dist = std::sqrt(acc);
      ws.s(j, k) = dist;
      ws.s(k, j) = dist;
      const double tdist = std::abs(labels[j] - labels[k]);
      ws.t(j, k) = tdist;
      ws.t(k, j) = tdist;
    }
  }

  ws.a = Matrix(n, n);
  ws.b = Matrix(n, n);
  double_center(ws.s, ws.a);
  double_center(ws.t, ws.b);

  ws.dcov2_xy = mean_elementwise_product(ws.a, ws.b);
  ws.dcov2_xx = mean_elementwise_product(ws.a, ws.a);
  ws.dcov2_yy = mean_elementwise_product(ws.b, ws.b);

  // dCov^2(X,Y) is nonnegative up to rounding; clamp the dust.
  const double scale = std::sqrt(ws.dcov2_xx * ws.dcov2_yy);
  if (ws.dcov2_xy < 0.0) {
    if (ws.dcov2_xy < -1e-9 * scale - 1e-15) {
      throw Error("distance_correlation: negative dCov^2 beyond rounding");
    }
    ws.dcov2_xy = 0.0;
  }
  if (ws.dcov2_xx <= 0.0 || ws.dcov2_yy <= 0.0) {
    // Identical rows / equal labels were ruled out above, so a vanishing
    // marginal dCov^2 here is numerically collapsed input.
    if (ws.dcov2_yy <= 0.0) throw DegenerateLabels("distance_correlation: dCov^2(Y,Y) = 0");
    throw DegenerateEmbeddings("distance_correlation: dCov^2(X,X) = 0");
  }

  res.dcor = ws.dcov2_xy / scale;
  if (res.dcor > 1.0) {
    if (res.dcor > 1.0 + 1e-9) throw Error("distance_correlation: dcor above 1 beyond rounding");
    res.dcor = 1.0;
  }
  return res;
}

double dcor_loss(const Matrix& embeddings, std::span<const double> labels, double floor) {
  const DcorResult res = distance_correlation(embeddings, labels);
  return std::log(std::max(res.dcor, floor));
}

Matrix dcor_loss_gradient(const Matrix& embeddings, std::span<const double> labels,
                          double floor) {
  DcorResult res;
  try {
    res = distance_correlation(embeddings, labels);
  } catch (const DegenerateLabels&) {
    return Matrix(embeddings.rows(), embeddings.cols());
  } catch (const DegenerateEmbeddings&) {
    return Matrix(embeddings.rows(), embeddings.cols());
  }
  return dcor_loss_gradient(embeddings, res, floor);
}

Matrix dcor_loss_gradient(const Matrix& embeddings, const DcorResult& res, double floor) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (res.dcor <= floor) return Matrix(n, d);

  const DcorWorkspace& ws = res.workspace;
  // d log(dcor) / dA = B / (n^2 dCov2_xy) - A / (n^2 dCov2_xx), and the
  // double centering is self-adjoint, so the distance-matrix gradient is
  // the doubly centered version of that expression.
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  Matrix dloss_da(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      dloss_da(j, k) =
          ws.b(j, k) / (n2 * ws.dcov2_xy) - ws.a(j, k) / (n2 * ws.dcov2_xx);
    }
  }
  Matrix dloss_ds(n, n);
  double_center(dloss_da, dloss_ds);

  // s_{jk} = ||x_j - x_k||; both the (j,k) and (k,j) entries depend on
  // x_j, and dloss_ds is symmetric, hence the factor 2.
  Matrix grad(n, d);
  for (std::size_t j = 0; j < n; ++j) {
    const auto xj = embeddings.row(j);
    auto gj = grad.row(j);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      const double dist = ws.s(j, k);
      if (dist == 0.0) continue;  // coincident pair: zero subgradient
      const double coeff = 2.0 * dloss_ds(j, k) / dist;
      const auto xk = embeddings.row(k);
      for (std::size_t c = 0; c < d; ++c) gj[c] += coeff * (xj[c] - xk[c]);
    }
  }
  return grad;
}

}  // namespace splitsim
