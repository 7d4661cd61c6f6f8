#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"
#include "ipca/optimizer.hpp"

namespace ipca {

namespace detail {

inline Matrix pooled_centered(const DatasetCollection& coll) {
  Eigen::Index total = 0;
  for (const auto& ds : coll.datasets) total += ds.size();
  require(total > coll.dim(), "usage", "pooled point count must exceed dimension");
  Matrix pooled(coll.dim(), total);
  Eigen::Index at = 0;
  for (const auto& ds : coll.datasets) {
    pooled.middleCols(at, ds.size()) = ds.points;
    at += ds.size();
  }
  pooled.colwise() -= Vector(pooled.rowwise().mean());
  return pooled;
}

inline void fix_row_signs(Matrix& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::Index imax;
    a.row(r).cwiseAbs().maxCoeff(&imax);
    if (a(r, imax) < 0.0) a.row(r) = -a.row(r);
  }
}

inline Matrix gram_schmidt_rows(const Matrix& rows) {
  Matrix q = rows;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j)
      q.row(i) -= q.row(i).dot(q.row(j)) * q.row(j);
    double norm = q.row(i).norm();
    require(norm > 1e-12, "numeric", "selected components are linearly dependent");
    q.row(i) /= norm;
  }
  return q;
}

}  // namespace detail

/// PCA baseline under the comparison protocol: pool all datasets, center,
/// return the top-m eigenvectors of the sample covariance as rows
/// (descending eigenvalue order, largest-magnitude entry of each row
/// positive).
inline ProjectionMatrix pca_projection(const DatasetCollection& coll, Eigen::Index m) {
  require(m >= 1 && m <= coll.dim(), "usage", "pca_projection requires 1 <= m <= d");
  Matrix pooled = detail::pooled_centered(coll);
  Matrix cov = pooled * pooled.transpose() / double(pooled.cols() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, "numeric", "covariance eigendecomposition failed");

  const auto d = coll.dim();
  const double lmax = eig.eigenvalues()(d - 1);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (eig.eigenvalues()(i) > 1e-12 * std::max(lmax, 1.0)) ++rank;
  require(rank >= m, "numeric",
          "covariance rank " + std::to_string(rank) + " is below requested m = " +
              std::to_string(m));

  Matrix a(m, d);
  for (Eigen::Index k = 0; k < m; ++k)
    a.row(k) = eig.eigenvectors().col(d - 1 - k).transpose();
  detail::fix_row_signs(a);
  ProjectionMatrix out{a};
  out.validate();
  return out;
}

/// Fixed-point ICA (symmetric decorrelation, tanh contrast) on the pooled,
/// whitened cloud. Estimates all d unmixing rows in the original
/// coordinates, ranks them by Euclidean norm, keeps the top m, and
/// Gram-Schmidt orthonormalizes so the result lives on the same feasible
/// set as IPCA.
inline ProjectionMatrix ica_projection(const DatasetCollection& coll, Eigen::Index m,
                                       std::uint64_t seed) {
  const auto d = coll.dim();
  require(m >= 1 && m <= d, "usage", "ica_projection requires 1 <= m <= d");
  Matrix pooled = detail::pooled_centered(coll);
  const double t = double(pooled.cols());

  Matrix cov = pooled * pooled.transpose() / (t - 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, "numeric", "whitening eigendecomposition failed");
  require(eig.eigenvalues()(0) > 1e-12 * std::max(eig.eigenvalues()(d - 1), 1.0),
          "numeric", "pooled covariance is rank deficient, cannot whiten");
  Matrix whiten = eig.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                  eig.eigenvectors().transpose();
  Matrix z = whiten * pooled;

  Matrix w = random_orthonormal(d, d, seed).values;
  constexpr int kMaxSweeps = 200;
  constexpr double kTol = 1e-6;
  double delta = 1.0;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Matrix wz = w * z;                       // d x T source estimates
    Matrix g = wz.array().tanh();            // contrast
    Vector gprime_mean = (1.0 - g.array().square()).rowwise().mean();
    Matrix w_new = (g * z.transpose()) / t - gprime_mean.asDiagonal() * w;

    // Symmetric decorrelation: W <- (W W^T)^(-1/2) W.
    Eigen::SelfAdjointEigenSolver<Matrix> dec(w_new * w_new.transpose());
    w_new = dec.eigenvectors() *
            dec.eigenvalues().array().rsqrt().matrix().asDiagonal() *
            dec.eigenvectors().transpose() * w_new;

    delta = (1.0 - (w_new * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = w_new;
    if (delta < kTol) break;
  }
  require(delta < kTol, "numeric",
          "fixed-point ICA did not converge after 200 sweeps (last delta " +
              std::to_string(delta) + ")");

  // Unmixing rows back in unwhitened coordinates, ranked by norm.
  Matrix unmix = w * whiten;
  std::vector<Eigen::Index> order(d);
  for (Eigen::Index i = 0; i < d; ++i) order[i] = i;
  Vector norms = unmix.rowwise().norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  Matrix selected(m, d);
  for (Eigen::Index k = 0; k < m; ++k) selected.row(k) = unmix.row(order[k]);
  Matrix a = detail::gram_schmidt_rows(selected);
  detail::fix_row_signs(a);
  ProjectionMatrix out{a};
  out.validate();
  return out;
}

}  // namespace ipca
