#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"

namespace ipca {

/// Two classes of 2-D datasets that are mirror images about the line x = 5.
/// Class 1: x ~ chi^2_df, y ~ +-chi^2_df (sign equiprobable per point).
/// Class 2: generated identically, then x -> -x + 10.
inline DatasetCollection make_mirror_collection(std::size_t n1 = 5, std::size_t n2 = 5,
                                                std::size_t points_per_set = 400,
                                                double df = 4.0, std::uint64_t seed = 0) {
  require(n1 >= 1 && n2 >= 1 && points_per_set >= 1, "usage",
          "mirror collection counts must be >= 1");
  require(df >= 1.0, "usage", "chi-squared degrees of freedom must be >= 1");

  std::mt19937_64 rng(seed);
  std::chi_squared_distribution<double> chi2(df);
  std::bernoulli_distribution flip(0.5);

  DatasetCollection coll;
  coll.channels = {"x", "y"};
  for (std::size_t s = 0; s < n1 + n2; ++s) {
    const bool mirrored = s >= n1;
    Dataset ds;
    ds.channels = coll.channels;
    ds.label = mirrored ? "class2" : "class1";
    ds.id = (mirrored ? "class2_" : "class1_") +
            std::to_string(mirrored ? s - n1 + 1 : s + 1);
    ds.points.resize(2, static_cast<Eigen::Index>(points_per_set));
    for (Eigen::Index p = 0; p < ds.points.cols(); ++p) {
      double x = chi2(rng);
      double y = chi2(rng) * (flip(rng) ? 1.0 : -1.0);
      ds.points(0, p) = mirrored ? 10.0 - x : x;
      ds.points(1, p) = y;
    }
    coll.datasets.push_back(std::move(ds));
  }
  return coll;
}

/// Higher-dimensional analog with planted structure: all dims i.i.d.
/// standard normal except the informative pair, where the class means
/// differ by `separation` and each dataset additionally draws its own mean
/// offset (sd = separation/4) per informative dim. The per-dataset offsets
/// model patient-to-patient variation; they spread the between-dataset
/// information over both informative directions, so a rank-2 projection has
/// to capture the whole informative plane rather than the single class-mean
/// direction. Dimensions are 1-based in `informative`.
inline DatasetCollection make_planted_collection(std::size_t n_per_class, Eigen::Index d,
                                                 std::pair<Eigen::Index, Eigen::Index> informative,
                                                 double separation,
                                                 std::size_t points_per_set,
                                                 std::uint64_t seed) {
  require(n_per_class >= 1 && points_per_set >= 1 && d >= 1, "usage",
          "planted collection counts must be >= 1");
  auto [i1, i2] = informative;
  require(i1 != i2 && i1 >= 1 && i1 <= d && i2 >= 1 && i2 <= d, "usage",
          "informative dims must be distinct and within 1..d");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  DatasetCollection coll;
  for (Eigen::Index c = 1; c <= d; ++c) coll.channels.push_back("ch" + std::to_string(c));
  for (std::size_t s = 0; s < 2 * n_per_class; ++s) {
    const bool second = s >= n_per_class;
    Dataset ds;
    ds.channels = coll.channels;
    ds.label = second ? "class2" : "class1";
    ds.id = (second ? "class2_" : "class1_") +
            std::to_string(second ? s - n_per_class + 1 : s + 1);
    ds.points.resize(d, static_cast<Eigen::Index>(points_per_set));
    const double base = second ? separation : 0.0;
    const double jitter1 = gauss(rng) * separation / 4.0;
    const double jitter2 = gauss(rng) * separation / 4.0;
    for (Eigen::Index p = 0; p < ds.points.cols(); ++p)
      for (Eigen::Index r = 0; r < d; ++r) ds.points(r, p) = gauss(rng);
    ds.points.row(i1 - 1).array() += base + jitter1;
    ds.points.row(i2 - 1).array() += base + jitter2;
    coll.datasets.push_back(std::move(ds));
  }
  return coll;
}

}  // namespace ipca
