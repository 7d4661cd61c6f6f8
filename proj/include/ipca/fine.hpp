#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"
#include "ipca/divergence.hpp"

namespace ipca {

/// One point per dataset: the collection's densities embedded in e-dimensional
/// Euclidean space.
struct EmbeddingResult {
  Matrix coordinates;  // N x e
  Vector eigenvalues;  // the e retained spectrum values, descending
  std::vector<std::string> ids;
  std::vector<std::optional<std::string>> labels;
  int clamped_negative = 0;  // retained eigenvalues that were negative and clamped
};

/// Classical MDS: double-center B = -1/2 H (G.*G) H, eigendecompose, scale the
/// top-e eigenvectors by sqrt of their (clamped-nonnegative) eigenvalues.
/// Sign convention: each coordinate column's largest-magnitude entry is made
/// positive, so the output is deterministic.
inline EmbeddingResult classical_mds(const DissimilarityMatrix& g, Eigen::Index e) {
  const auto n = g.count();
  require(e >= 1 && e <= n - 1, "usage", "embedding dimension must satisfy 1 <= e <= N-1");
  require(g.values.isApprox(g.values.transpose(), 1e-12), "usage",
          "dissimilarity matrix must be symmetric");

  Matrix g2 = g.values.array().square();
  Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / double(n));
  Matrix b = -0.5 * h * g2 * h;
  b = 0.5 * (b + b.transpose());  // symmetrize away round-off

  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  require(eig.info() == Eigen::Success, "numeric", "cMDS eigendecomposition failed");

  EmbeddingResult out;
  out.ids = g.ids;
  out.coordinates = Matrix::Zero(n, e);
  out.eigenvalues = Vector::Zero(e);
  for (Eigen::Index k = 0; k < e; ++k) {
    const Eigen::Index src = n - 1 - k;  // solver sorts ascending
    double lambda = eig.eigenvalues()(src);
    if (lambda < 0.0) {
      ++out.clamped_negative;
      lambda = 0.0;
    }
    out.eigenvalues(k) = lambda;
    Vector col = eig.eigenvectors().col(src) * std::sqrt(lambda);
    Eigen::Index imax;
    col.cwiseAbs().maxCoeff(&imax);
    if (col(imax) < 0.0) col = -col;
    out.coordinates.col(k) = col;
  }
  return out;
}

/// FINE: symmetrized-KL dissimilarities -> geodesic closure -> classical MDS.
inline EmbeddingResult fine(const DatasetCollection& coll, Eigen::Index e,
                            const BandwidthRule& rule) {
  require(coll.count() >= 3, "usage", "FINE needs at least 3 datasets");
  auto d = dissimilarity_matrix(coll, rule);
  auto result = classical_mds(fisher_geodesic_matrix(d), e);
  result.labels.clear();
  for (const auto& ds : coll.datasets) result.labels.push_back(ds.label);
  return result;
}

}  // namespace ipca
