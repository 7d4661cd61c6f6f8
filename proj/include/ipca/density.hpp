#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ipca/common.hpp"

namespace ipca {

/// Bandwidth selection rule for KDE fitting: Silverman's rule of thumb, or a
/// user-fixed scalar bandwidth.
struct BandwidthRule {
  enum class Kind { silverman, fixed };
  Kind kind = Kind::silverman;
  double h = 0.0;

  static BandwidthRule silverman() { return {Kind::silverman, 0.0}; }
  static BandwidthRule fixed(double h) {
    require(h > 0.0, "usage", "fixed bandwidth must be positive");
    return {Kind::fixed, h};
  }
};

/// Gaussian kernel density estimate with isotropic kernel covariance h^2 I.
struct KdeModel {
  Matrix points;     // kernel centers, dim x n
  double bandwidth;  // h > 0

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }
};

/// Silverman bandwidth for a dim x n point matrix:
///   h = sigma * (4 / ((dim + 2) n))^(1 / (dim + 4)),
/// with sigma = sqrt(mean of per-dimension sample variances). The RMS
/// aggregation makes h invariant under rotations of the point cloud, which
/// keeps the projection objective invariant under in-plane rotations of A.
/// Falls back to h = 1 for n = 1.
inline double silverman_bandwidth(const Matrix& points) {
  const auto dim = points.rows();
  const auto n = points.cols();
  if (n == 1) return 1.0;
  Vector mean = points.rowwise().mean();
  double var_sum = 0.0;
  for (Eigen::Index r = 0; r < dim; ++r)
    var_sum += (points.row(r).array() - mean(r)).square().sum() / double(n - 1);
  const double sigma = std::sqrt(var_sum / double(dim));
  require(sigma > 0.0, "numeric",
          "silverman bandwidth undefined: point cloud has zero variance");
  const double md = static_cast<double>(dim);
  return sigma * std::pow(4.0 / ((md + 2.0) * double(n)), 1.0 / (md + 4.0));
}

inline KdeModel fit_kde(const Matrix& points, const BandwidthRule& rule) {
  require(points.cols() >= 1 && points.rows() >= 1, "usage",
          "cannot fit a KDE to an empty point set");
  require(points.allFinite(), "numeric", "KDE points must be finite");
  double h = rule.kind == BandwidthRule::Kind::fixed ? rule.h
                                                     : silverman_bandwidth(points);
  return {points, h};
}

/// log of the Gaussian-kernel normalizer for the model: every kernel is
/// N(.; x_i, h^2 I), so log Z = (dim/2) log(2 pi) + dim log h, plus log n
/// for the mixture weight.
inline double kde_log_norm(const KdeModel& model) {
  const double md = static_cast<double>(model.dim());
  return 0.5 * md * std::log(2.0 * std::numbers::pi) +
         md * std::log(model.bandwidth) + std::log(double(model.size()));
}

/// Log-densities of the model at the columns of `queries` (dim x k),
/// accumulated with log-sum-exp.
inline Vector log_density_batch(const KdeModel& model, const Matrix& queries) {
  require(queries.rows() == model.dim(), "usage",
          "query dimension does not match KDE model");
  Matrix logterms = pairwise_sqdist(queries, model.points) *
                    (-0.5 / (model.bandwidth * model.bandwidth));
  return logsumexp_rows(logterms).array() - kde_log_norm(model);
}

inline double log_density(const KdeModel& model, const Vector& query) {
  require(query.allFinite(), "usage", "query must be finite");
  return log_density_batch(model, query)(0);
}

struct DensityGrid {
  std::vector<Vector> axes;  // one coordinate vector per dimension (1 or 2)
  Vector values;             // exp(log_density), row-major over the grid
};

/// Samples exp(log_density) on a regular grid; only 1-D and 2-D models,
/// which is all the contour/line plots need.
inline DensityGrid density_grid(const KdeModel& model,
                                const std::vector<std::pair<double, double>>& bounds,
                                const std::vector<int>& resolution) {
  const auto dim = model.dim();
  require(dim == 1 || dim == 2, "usage", "density grids only for 1-D or 2-D models");
  require(bounds.size() == static_cast<std::size_t>(dim) &&
              resolution.size() == static_cast<std::size_t>(dim),
          "usage", "bounds/resolution must match model dimension");
  DensityGrid grid;
  for (Eigen::Index a = 0; a < dim; ++a) {
    auto [lo, hi] = bounds[a];
    require(lo < hi, "usage", "grid bounds must satisfy lo < hi");
    require(resolution[a] >= 2, "usage", "grid resolution must be >= 2");
    grid.axes.push_back(Vector::LinSpaced(resolution[a], lo, hi));
  }
  if (dim == 1) {
    Matrix q(1, grid.axes[0].size());
    q.row(0) = grid.axes[0].transpose();
    grid.values = log_density_batch(model, q).array().exp();
  } else {
    const auto nx = grid.axes[0].size();
    const auto ny = grid.axes[1].size();
    Matrix q(2, nx * ny);
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < ny; ++j) {
        q(0, i * ny + j) = grid.axes[0](i);
        q(1, i * ny + j) = grid.axes[1](j);
      }
    grid.values = log_density_batch(model, q).array().exp();
  }
  return grid;
}

}  // namespace ipca
