#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ipca/density.hpp"
#include "test_helpers.hpp"

using namespace ipca;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("fit_kde honors fixed bandwidths and rejects bad input") {
  Matrix one(1, 1);
  one << 0.0;
  CHECK(fit_kde(one, BandwidthRule::fixed(1.0)).bandwidth == 1.0);
  CHECK_THROWS_AS(BandwidthRule::fixed(0.0), Error);
  CHECK_THROWS_AS(fit_kde(Matrix(1, 0), BandwidthRule::silverman()), Error);
}

TEST_CASE("silverman bandwidth matches the 1-D closed form") {
  // 1-D: h = (4/3)^(1/5) sigma n^(-1/5) ~= 1.0592 sigma n^(-1/5)
  Matrix pts = test_helpers::random_matrix(1, 1000, 3);
  double mean = pts.mean();
  double sigma = std::sqrt((pts.array() - mean).square().sum() / 999.0);
  double expected = 1.0592 * sigma * std::pow(1000.0, -0.2);
  CHECK_THAT(fit_kde(pts, BandwidthRule::silverman()).bandwidth,
             WithinRel(expected, 0.05));
}

TEST_CASE("silverman bandwidth falls back to 1 for a single point") {
  Matrix one(2, 1);
  one << 3.0, -1.0;
  CHECK(fit_kde(one, BandwidthRule::silverman()).bandwidth == 1.0);
}

TEST_CASE("log_density closed forms") {
  Matrix p0(1, 1);
  p0 << 0.0;
  Vector q(1);
  q << 0.0;
  CHECK_THAT(log_density({p0, 1.0}, q),
             WithinAbs(std::log(1.0 / std::sqrt(2.0 * std::numbers::pi)), 1e-12));

  Matrix p2(1, 2);
  p2 << -1.0, 1.0;
  CHECK_THAT(log_density({p2, 1.0}, q), WithinAbs(std::log(0.2419707245191434), 1e-9));

  Matrix p2d(2, 1);
  p2d << 0.0, 0.0;
  Vector q2(2);
  q2 << 0.0, 0.0;
  CHECK_THAT(log_density({p2d, 2.0}, q2),
             WithinAbs(std::log(1.0 / (2.0 * std::numbers::pi * 4.0)), 1e-12));
}

TEST_CASE("log_density is invariant under permutation of stored points") {
  Matrix pts = test_helpers::random_matrix(2, 30, 5);
  Matrix shuffled(2, 30);
  for (Eigen::Index c = 0; c < 30; ++c) shuffled.col(c) = pts.col((c * 7) % 30);
  Vector q(2);
  q << 0.3, -0.1;
  CHECK_THAT(log_density({pts, 0.7}, q), WithinAbs(log_density({shuffled, 0.7}, q), 1e-12));
}

TEST_CASE("midpoint density between far-apart kernels grows with bandwidth") {
  Matrix pts(1, 2);
  pts << -5.0, 5.0;
  Vector mid(1);
  mid << 0.0;
  double d_half = log_density({pts, 0.5}, mid);
  double d_one = log_density({pts, 1.0}, mid);
  double d_two = log_density({pts, 2.0}, mid);
  CHECK(d_half < d_one);
  CHECK(d_one < d_two);
}

TEST_CASE("density_grid evaluates 1-D grids directly") {
  Matrix p0(1, 1);
  p0 << 0.0;
  auto grid = density_grid({p0, 1.0}, {{-1.0, 1.0}}, {3});
  REQUIRE(grid.values.size() == 3);
  const double phi1 = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
  const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK_THAT(grid.values(0), WithinAbs(phi1, 1e-9));
  CHECK_THAT(grid.values(1), WithinAbs(phi0, 1e-9));
  CHECK_THAT(grid.values(2), WithinAbs(phi1, 1e-9));
}

TEST_CASE("density_grid is symmetric for symmetric point sets and nonnegative") {
  Matrix pts(1, 4);
  pts << -2.0, -0.5, 0.5, 2.0;
  auto grid = density_grid({pts, 0.8}, {{-3.0, 3.0}}, {31});
  for (Eigen::Index i = 0; i < 31; ++i) {
    CHECK(grid.values(i) >= 0.0);
    CHECK_THAT(grid.values(i), WithinAbs(grid.values(30 - i), 1e-12));
  }
  CHECK_THROWS_AS(density_grid({test_helpers::random_matrix(3, 4, 1), 1.0},
                               {{0, 1}, {0, 1}, {0, 1}}, {4, 4, 4}),
                  Error);
}

TEST_CASE("KDE integrates to one by quadrature") {
  // 1-D trapezoid over a +-8h padded box
  Matrix pts = test_helpers::random_matrix(1, 40, 11);
  auto model = fit_kde(pts, BandwidthRule::silverman());
  const double pad = 8.0 * model.bandwidth;
  const double lo = pts.minCoeff() - pad, hi = pts.maxCoeff() + pad;
  const int n = 4000;
  auto grid = density_grid(model, {{lo, hi}}, {n});
  double dx = (hi - lo) / (n - 1);
  double integral = grid.values.sum() * dx -
                    0.5 * dx * (grid.values(0) + grid.values(n - 1));
  CHECK_THAT(integral, WithinAbs(1.0, 1e-3));

  // 2-D
  Matrix pts2 = test_helpers::random_matrix(2, 40, 12);
  auto model2 = fit_kde(pts2, BandwidthRule::silverman());
  const double pad2 = 8.0 * model2.bandwidth;
  std::vector<std::pair<double, double>> bounds = {
      {pts2.row(0).minCoeff() - pad2, pts2.row(0).maxCoeff() + pad2},
      {pts2.row(1).minCoeff() - pad2, pts2.row(1).maxCoeff() + pad2}};
  const int n2 = 400;
  auto grid2 = density_grid(model2, bounds, {n2, n2});
  double da = (bounds[0].second - bounds[0].first) / (n2 - 1) *
              (bounds[1].second - bounds[1].first) / (n2 - 1);
  CHECK_THAT(grid2.values.sum() * da, WithinAbs(1.0, 1e-3));
}
