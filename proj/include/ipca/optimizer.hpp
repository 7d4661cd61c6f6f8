#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"
#include "ipca/density.hpp"
#include "ipca/divergence.hpp"

namespace ipca {

/// Row-orthonormal m x d linear map, the IPCA unknown A.
struct ProjectionMatrix {
  Matrix values;

  Eigen::Index m() const { return values.rows(); }
  Eigen::Index d() const { return values.cols(); }

  double orthonormality_residual() const {
    const auto mm = values.rows();
    return (values * values.transpose() - Matrix::Identity(mm, mm)).norm();
  }

  void validate() const {
    require(values.rows() >= 1 && values.rows() <= values.cols(), "usage",
            "projection must satisfy 1 <= m <= d");
    require(orthonormality_residual() <= 1e-8, "numeric",
            "projection rows are not orthonormal");
  }
};

enum class GradMode { analytic_frozen_bandwidth, finite_difference };

struct OptimizerConfig {
  Eigen::Index m = 2;
  double mu = 1e-3;
  int max_iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  GradMode grad_mode = GradMode::analytic_frozen_bandwidth;
  double fd_epsilon = 1e-5;
  double retraction_threshold = 1e-9;

  void validate(Eigen::Index d) const {
    require(mu > 0.0 && tol > 0.0, "usage", "mu and tol must be positive");
    require(m >= 1 && m <= d, "usage", "projection dimension must satisfy 1 <= m <= d");
  }
};

struct IterationRecord {
  int iteration;
  double objective;
  double per_pair_objective;  // J / (N (N-1))
  double step;                // mu actually used (0 for the init record)
  double constraint_residual;
  bool backtracked;
};

struct OptimizerTrace {
  std::vector<IterationRecord> records;
  Matrix final_values;
  int iterations = 0;
  bool converged = false;
};

/// Haar-distributed random m-frame in d-space: QR of an i.i.d. standard
/// normal d x m matrix, with the usual sign fix for a unique, uniformly
/// distributed Q factor.
inline ProjectionMatrix random_orthonormal(Eigen::Index m, Eigen::Index d,
                                           std::uint64_t seed) {
  require(m >= 1 && m <= d, "usage", "random_orthonormal requires 1 <= m <= d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g(d, m);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, m);
  Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return {q.transpose()};
}

/// Nearest row-orthonormal matrix: polar factor U V^T from the thin SVD.
inline Matrix polar_retract(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Constrained gradient direction of Appendix-style orthonormality descent:
///   delta_tilde = delta - 1/2 (delta A^T + A delta^T) A.
/// First-order tangent to the feasible set: delta_tilde A^T + A delta_tilde^T = 0.
inline Matrix constrain_gradient(const Matrix& delta, const ProjectionMatrix& a) {
  require(delta.rows() == a.m() && delta.cols() == a.d(), "usage",
          "constrain_gradient shape mismatch");
  const Matrix& A = a.values;
  return delta - 0.5 * (delta * A.transpose() + A * delta.transpose()) * A;
}

namespace detail {

inline std::vector<Matrix> collection_point_sets(const DatasetCollection& coll) {
  std::vector<Matrix> sets;
  sets.reserve(coll.count());
  for (const auto& ds : coll.datasets) sets.push_back(ds.points);
  return sets;
}

inline std::vector<Matrix> project_sets(const std::vector<Matrix>& sets, const Matrix& A) {
  std::vector<Matrix> out;
  out.reserve(sets.size());
  for (const auto& x : sets) {
    require(x.rows() == A.cols(), "usage", "projection dimension mismatch");
    out.push_back(A * x);
  }
  return out;
}

/// Symmetrized-KL matrix of the projected sets with explicit per-set
/// bandwidths. Self mean log-densities are computed once per set.
inline Matrix projected_kl_matrix(const std::vector<Matrix>& projected,
                                  const std::vector<double>& hs) {
  const auto n = static_cast<Eigen::Index>(projected.size());
  std::vector<KdeModel> models(n);
  Vector self_mean(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    models[i] = KdeModel{projected[i], hs[i]};
    self_mean(i) = log_density_batch(models[i], projected[i]).mean();
  }
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double kl_ij = self_mean(i) - log_density_batch(models[j], projected[i]).mean();
      double kl_ji = self_mean(j) - log_density_batch(models[i], projected[j]).mean();
      double s = std::max(0.0, kl_ij + kl_ji);
      d(i, j) = s;
      d(j, i) = s;
    }
  return d;
}

inline double frobenius_sq_diff(const Matrix& a, const Matrix& b) {
  return (a - b).squaredNorm();
}

}  // namespace detail

/// Bandwidths the rule assigns to each dataset in the space projected by A.
inline std::vector<double> projected_bandwidths(const std::vector<Matrix>& sets,
                                                const Matrix& A, const BandwidthRule& rule) {
  std::vector<double> hs;
  hs.reserve(sets.size());
  for (const auto& x : sets) hs.push_back(fit_kde(A * x, rule).bandwidth);
  return hs;
}

/// J(A) with bandwidths frozen to the supplied per-set values.
inline double objective_frozen(const std::vector<Matrix>& sets, const Matrix& A,
                               const Matrix& d_full, const std::vector<double>& hs) {
  auto projected = detail::project_sets(sets, A);
  return detail::frobenius_sq_diff(d_full, detail::projected_kl_matrix(projected, hs));
}

/// J(A) = || D(X) - D(X, A) ||_F^2 with projected-space bandwidths re-fit
/// from the rule at this A.
inline double objective(const std::vector<Matrix>& sets, const Matrix& A,
                        const Matrix& d_full, const BandwidthRule& rule) {
  return objective_frozen(sets, A, d_full, projected_bandwidths(sets, A, rule));
}

inline double objective(const DatasetCollection& coll, const ProjectionMatrix& a,
                        const DissimilarityMatrix& d_full, const BandwidthRule& rule) {
  require(d_full.count() == static_cast<Eigen::Index>(coll.count()), "mismatch",
          "dissimilarity matrix size does not match collection");
  return objective(detail::collection_point_sets(coll), a.values, d_full.values, rule);
}

/// Exact gradient of the frozen-bandwidth plug-in objective. For each
/// (query set q, density set k) pair the mean-log-density term contributes
///   d/dA [ (1/n_q) sum_s log p_k(A x_s) ]
///     = -(1/(n_q h_k^2)) * A * [ Xq Xq^T - Xq W Xk^T - Xk W^T Xq^T
///                                + Xk diag(colsum W) Xk^T ],
/// with W the row-stochastic softmax weight matrix of the log-sum-exp
/// density evaluations. Pairs whose symmetrized KL is clamped at zero
/// contribute nothing (subgradient of the clamp).
inline Matrix analytic_gradient(const std::vector<Matrix>& sets, const Matrix& A,
                                const Matrix& d_full, const std::vector<double>& hs) {
  const auto n = static_cast<Eigen::Index>(sets.size());
  const auto d = A.cols();
  auto projected = detail::project_sets(sets, A);

  std::vector<Matrix> xxt(n);  // Xq Xq^T, reused across pairs
  for (Eigen::Index q = 0; q < n; ++q) xxt[q] = sets[q] * sets[q].transpose();

  // C(q,k) = (1/(n_q h_k^2)) * bracket matrix; M(q,k) = mean log p_k over Y_q.
  std::vector<Matrix> c(n * n);
  Matrix m_mean(n, n);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double h = hs[k];
      Matrix logterms =
          pairwise_sqdist(projected[q], projected[k]) * (-0.5 / (h * h));
      Vector rowmax = logterms.rowwise().maxCoeff();
      Matrix w = (logterms.colwise() - rowmax).array().exp();
      Vector rowsum = w.rowwise().sum();
      const double lognorm = 0.5 * A.rows() * std::log(2.0 * std::numbers::pi) +
                             A.rows() * std::log(h) + std::log(double(sets[k].cols()));
      m_mean(q, k) =
          (rowmax.array() + rowsum.array().log()).mean() - lognorm;
      w.array().colwise() /= rowsum.array();
      Vector colsum = w.colwise().sum();
      Matrix cross = sets[q] * (w * sets[k].transpose());
      Matrix bracket = xxt[q] - cross - cross.transpose() +
                       sets[k] * colsum.asDiagonal() * sets[k].transpose();
      c[q * n + k] = bracket / (double(sets[q].cols()) * h * h);
    }
  }

  Matrix acc = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = (m_mean(i, i) - m_mean(i, j)) + (m_mean(j, j) - m_mean(j, i));
      if (s <= 0.0) continue;  // clamped pair
      double r = d_full(i, j) - s;
      acc += r * (c[i * n + i] + c[j * n + j] - c[i * n + j] - c[j * n + i]);
    }
  return 4.0 * A * acc;
}

/// Central finite differences of the frozen-bandwidth objective.
inline Matrix finite_difference_gradient_frozen(const std::vector<Matrix>& sets,
                                                const Matrix& A, const Matrix& d_full,
                                                const std::vector<double>& hs,
                                                double eps) {
  Matrix g(A.rows(), A.cols());
  Matrix a = A;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      a(i, j) = A(i, j) + eps;
      double jp = objective_frozen(sets, a, d_full, hs);
      a(i, j) = A(i, j) - eps;
      double jm = objective_frozen(sets, a, d_full, hs);
      a(i, j) = A(i, j);
      g(i, j) = (jp - jm) / (2.0 * eps);
    }
  return g;
}

/// Central finite differences of the full objective, bandwidths re-fit
/// inside every perturbed evaluation.
inline Matrix finite_difference_gradient(const std::vector<Matrix>& sets, const Matrix& A,
                                         const Matrix& d_full, const BandwidthRule& rule,
                                         double eps) {
  Matrix g(A.rows(), A.cols());
  Matrix a = A;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      a(i, j) = A(i, j) + eps;
      double jp = objective(sets, a, d_full, rule);
      a(i, j) = A(i, j) - eps;
      double jm = objective(sets, a, d_full, rule);
      a(i, j) = A(i, j);
      g(i, j) = (jp - jm) / (2.0 * eps);
    }
  return g;
}

inline Matrix gradient(const DatasetCollection& coll, const ProjectionMatrix& a,
                       const DissimilarityMatrix& d_full, GradMode mode,
                       const BandwidthRule& rule, double fd_epsilon = 1e-5) {
  auto sets = detail::collection_point_sets(coll);
  switch (mode) {
    case GradMode::analytic_frozen_bandwidth:
      return analytic_gradient(sets, a.values, d_full.values,
                               projected_bandwidths(sets, a.values, rule));
    case GradMode::finite_difference:
      return finite_difference_gradient(sets, a.values, d_full.values, rule, fd_epsilon);
  }
  throw Error("usage", "unknown gradient mode");
}

struct OptimizeResult {
  ProjectionMatrix a;
  OptimizerTrace trace;
};

/// Gradient descent on the orthonormal frames: A <- A - mu * delta_tilde,
/// with an adaptive step (mu halved up to 20 times when J would increase,
/// doubled after a cleanly accepted step) and polar re-orthonormalization
/// whenever the constraint residual of a proposed iterate exceeds the
/// retraction threshold. Candidates are evaluated after retraction, so
/// accepted J values are exactly non-increasing and every accepted iterate
/// is feasible.
inline OptimizeResult optimize(const DatasetCollection& coll, const OptimizerConfig& config,
                               const DissimilarityMatrix& d_full, const BandwidthRule& rule) {
  require(d_full.count() == static_cast<Eigen::Index>(coll.count()), "mismatch",
          "dissimilarity matrix size does not match collection");
  config.validate(coll.dim());
  auto sets = detail::collection_point_sets(coll);
  const auto n = static_cast<double>(coll.count());
  const double pair_norm = n * (n - 1.0);

  ProjectionMatrix a = random_orthonormal(config.m, coll.dim(), config.seed);
  double j_cur = objective(sets, a.values, d_full.values, rule);

  OptimizerTrace trace;
  trace.records.push_back({0, j_cur, j_cur / pair_norm, 0.0,
                           a.orthonormality_residual(), false});
  double mu = config.mu;
  constexpr int kMaxBacktracks = 20;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    Matrix delta;
    if (config.grad_mode == GradMode::analytic_frozen_bandwidth) {
      delta = analytic_gradient(sets, a.values, d_full.values,
                                projected_bandwidths(sets, a.values, rule));
    } else {
      delta = finite_difference_gradient(sets, a.values, d_full.values, rule,
                                         config.fd_epsilon);
    }
    Matrix dir = constrain_gradient(delta, a);

    bool accepted = false;
    int backtracks = 0;
    Matrix a_new;
    double j_new = j_cur;
    while (backtracks <= kMaxBacktracks) {
      a_new = a.values - mu * dir;
      ProjectionMatrix cand{a_new};
      if (cand.orthonormality_residual() > config.retraction_threshold)
        cand.values = polar_retract(cand.values);
      j_new = objective(sets, cand.values, d_full.values, rule);
      if (j_new <= j_cur) {
        a.values = cand.values;
        accepted = true;
        break;
      }
      mu *= 0.5;
      ++backtracks;
    }
    if (!accepted) {
      // Backtracking exhausted: no descent direction at this resolution,
      // treat as converged at a local minimum.
      trace.converged = true;
      trace.iterations = iter - 1;
      break;
    }
    trace.records.push_back({iter, j_new, j_new / pair_norm, mu,
                             a.orthonormality_residual(), backtracks > 0});
    trace.iterations = iter;
    if (backtracks == 0) mu = std::min(mu * 2.0, 1e12);
    double rel = std::abs(j_new - j_cur) / std::max(j_cur, 1e-12);
    j_cur = j_new;
    if (rel < config.tol) {
      trace.converged = true;
      break;
    }
  }
  trace.final_values = a.values;
  return {a, trace};
}

struct ChannelScore {
  std::string channel;
  double score;      // column norm of A, normalized to unit max
  Vector loadings;   // raw column of A
};

/// Ranks channels by the Euclidean norm of their loading column in A,
/// normalized so the top channel scores 1.
inline std::vector<ChannelScore> variable_selection_report(
    const ProjectionMatrix& a, const std::vector<std::string>& channels) {
  require(static_cast<Eigen::Index>(channels.size()) == a.d(), "usage",
          "channel count does not match projection width");
  Vector norms = a.values.colwise().norm();
  double top = norms.maxCoeff();
  if (top <= 0.0) top = 1.0;
  std::vector<ChannelScore> scores;
  for (Eigen::Index c = 0; c < a.d(); ++c)
    scores.push_back({channels[c], norms(c) / top, a.values.col(c)});
  std::stable_sort(scores.begin(), scores.end(),
                   [](const auto& x, const auto& y) { return x.score > y.score; });
  return scores;
}

}  // namespace ipca
