#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"
#include "ipca/density.hpp"

namespace ipca {

/// Symmetric N x N dissimilarities between the collection's datasets:
/// either raw symmetrized-KL values or their geodesic (shortest-path over
/// sqrt-KL edge weights) closure.
struct DissimilarityMatrix {
  enum class Kind { kl_symmetric, fisher_geodesic };
  Matrix values;
  Kind kind = Kind::kl_symmetric;
  std::vector<std::string> ids;

  Eigen::Index count() const { return values.rows(); }
};

/// Plug-in Monte-Carlo estimate of KL(p||q): the mean log-density ratio over
/// the given samples (by convention the points that built p). May be
/// negative from estimator noise; clamping happens in dkl_symmetric.
inline double kl_plugin(const KdeModel& p, const KdeModel& q, const Matrix& samples_from_p) {
  require(p.dim() == q.dim() && samples_from_p.rows() == p.dim(), "usage",
          "kl_plugin dimension mismatch");
  require(samples_from_p.cols() >= 1, "usage", "kl_plugin needs at least one sample");
  Vector lp = log_density_batch(p, samples_from_p);
  Vector lq = log_density_batch(q, samples_from_p);
  return (lp - lq).mean();
}

/// Symmetrized KL between two point sets via their KDEs, clamped at zero so
/// downstream square roots are always defined.
inline double dkl_symmetric(const Matrix& points_i, const Matrix& points_j,
                            const BandwidthRule& rule) {
  require(points_i.rows() == points_j.rows(), "usage",
          "dkl_symmetric dimension mismatch");
  KdeModel pi = fit_kde(points_i, rule);
  KdeModel pj = fit_kde(points_j, rule);
  double s = kl_plugin(pi, pj, points_i) + kl_plugin(pj, pi, points_j);
  return std::max(0.0, s);
}

inline DissimilarityMatrix dissimilarity_matrix(const std::vector<Matrix>& point_sets,
                                                const BandwidthRule& rule,
                                                std::vector<std::string> ids = {}) {
  const auto n = static_cast<Eigen::Index>(point_sets.size());
  require(n >= 2, "usage", "dissimilarity matrix needs at least 2 datasets");
  DissimilarityMatrix out;
  out.kind = DissimilarityMatrix::Kind::kl_symmetric;
  out.ids = std::move(ids);
  out.values = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = dkl_symmetric(point_sets[i], point_sets[j], rule);
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  return out;
}

inline DissimilarityMatrix dissimilarity_matrix(const DatasetCollection& coll,
                                                const BandwidthRule& rule) {
  std::vector<Matrix> sets;
  sets.reserve(coll.count());
  for (const auto& ds : coll.datasets) sets.push_back(ds.points);
  return dissimilarity_matrix(sets, rule, coll.ids());
}

/// Geodesic approximation of the Fisher information distance: sqrt-KL edge
/// weights on the complete graph over the densities, closed under all-pairs
/// shortest paths (Floyd-Warshall).
inline DissimilarityMatrix fisher_geodesic_matrix(const DissimilarityMatrix& d) {
  require(d.kind == DissimilarityMatrix::Kind::kl_symmetric, "usage",
          "geodesic closure expects a kl_symmetric matrix");
  const auto n = d.count();
  DissimilarityMatrix out;
  out.kind = DissimilarityMatrix::Kind::fisher_geodesic;
  out.ids = d.ids;
  out.values = d.values.array().sqrt();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        double via = out.values(i, k) + out.values(k, j);
        if (via < out.values(i, j)) out.values(i, j) = via;
      }
  return out;
}

}  // namespace ipca
