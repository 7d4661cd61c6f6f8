#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ipca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error with a short machine-parsable class code ("ingest", "usage",
/// "numeric", "mismatch", "io"). The CLI prints `error:<code>: <message>`.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline void require(bool cond, const std::string& code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

/// splitmix64 step, used to derive independent per-fold / per-restart seeds
/// from a single master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Row-wise log-sum-exp of a matrix of log-terms. Rows of all -inf are not
/// expected here (kernel exponents are always finite).
inline Vector logsumexp_rows(const Matrix& logterms) {
  Vector rowmax = logterms.rowwise().maxCoeff();
  Vector out(logterms.rows());
  for (Eigen::Index r = 0; r < logterms.rows(); ++r) {
    out(r) = rowmax(r) +
             std::log((logterms.row(r).array() - rowmax(r)).exp().sum());
  }
  return out;
}

/// Squared Euclidean distances between columns of Q (queries) and columns of
/// C (centers); result is Q.cols() x C.cols().
inline Matrix pairwise_sqdist(const Matrix& Q, const Matrix& C) {
  Vector qn = Q.colwise().squaredNorm();
  Vector cn = C.colwise().squaredNorm();
  Matrix d2 = -2.0 * (Q.transpose() * C);
  d2.colwise() += qn;
  d2.rowwise() += cn.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace ipca
