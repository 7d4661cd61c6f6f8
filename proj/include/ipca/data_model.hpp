#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipca/common.hpp"

namespace ipca {

/// One patient/sample: a d-dimensional point cloud with named channels.
/// Points are stored d rows x n columns (one column per cell/observation).
struct Dataset {
  std::string id;
  std::vector<std::string> channels;
  Matrix points;
  std::optional<std::string> label;

  Eigen::Index dim() const { return points.rows(); }
  Eigen::Index size() const { return points.cols(); }
};

struct DatasetCollection {
  std::vector<Dataset> datasets;
  std::vector<std::string> channels;

  std::size_t count() const { return datasets.size(); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(channels.size()); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(datasets.size());
    for (const auto& ds : datasets) out.push_back(ds.id);
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline void validate_dataset(const Dataset& ds) {
  require(ds.points.rows() >= 1 && ds.points.cols() >= 1, "ingest",
          "dataset '" + ds.id + "' is empty");
  require(static_cast<Eigen::Index>(ds.channels.size()) == ds.points.rows(),
          "ingest", "dataset '" + ds.id + "' channel count does not match data");
  require(ds.points.allFinite(), "ingest",
          "dataset '" + ds.id + "' contains non-finite values");
  auto names = ds.channels;
  std::sort(names.begin(), names.end());
  require(std::adjacent_find(names.begin(), names.end()) == names.end(),
          "ingest", "dataset '" + ds.id + "' has duplicate channel names");
}

}  // namespace detail

/// Reads one CSV data file (observations as rows, header row of channel
/// names) and returns the transposed d x n point matrix.
inline Matrix read_points_csv(const std::filesystem::path& path,
                              const std::vector<std::string>& channels) {
  std::ifstream in(path);
  require(in.good(), "ingest", "cannot open data file: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "ingest",
          "empty data file: " + path.string());
  auto header = detail::split_csv_line(line);
  require(header == channels, "ingest",
          "channel mismatch in " + path.string() + ": header does not match manifest channels");

  const std::size_t d = channels.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    require(fields.size() == d, "ingest",
            path.string() + " row " + std::to_string(lineno) + ": expected " +
                std::to_string(d) + " columns, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      const char* first = fields[c].data();
      const char* last = first + fields[c].size();
      while (first != last && *first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      require(ec == std::errc() && ptr == last && std::isfinite(v), "ingest",
              path.string() + " row " + std::to_string(lineno) + " column '" +
                  channels[c] + "': not a finite number: '" + fields[c] + "'");
      values.push_back(v);
    }
    ++rows;
  }
  require(rows >= 1, "ingest", "no data rows in " + path.string());
  Matrix pts(d, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d; ++c)
      pts(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = values[r * d + c];
  return pts;
}

/// Loads a collection from a JSON manifest:
///   { "channels": [...], "datasets": [{"id":..., "path":..., "label":?}] }
/// Paths are resolved relative to the manifest's directory. All datasets
/// must share the manifest's channel sequence exactly (same names, same
/// order).
inline DatasetCollection load_collection(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  require(in.good(), "ingest", "cannot open manifest: " + manifest_path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("ingest", "manifest parse error in " + manifest_path.string() + ": " + e.what());
  }
  require(doc.contains("channels") && doc["channels"].is_array(), "ingest",
          "manifest missing 'channels' array");
  require(doc.contains("datasets") && doc["datasets"].is_array(), "ingest",
          "manifest missing 'datasets' array");

  DatasetCollection coll;
  for (const auto& c : doc["channels"]) coll.channels.push_back(c.get<std::string>());
  require(!coll.channels.empty(), "ingest", "manifest lists no channels");

  const auto base = manifest_path.parent_path();
  for (const auto& entry : doc["datasets"]) {
    Dataset ds;
    ds.id = entry.at("id").get<std::string>();
    ds.channels = coll.channels;
    if (entry.contains("label")) ds.label = entry["label"].get<std::string>();
    std::filesystem::path p = entry.at("path").get<std::string>();
    if (p.is_relative()) p = base / p;
    require(std::filesystem::exists(p), "ingest",
            "data file for dataset '" + ds.id + "' not found: " + p.string());
    ds.points = read_points_csv(p, coll.channels);
    detail::validate_dataset(ds);
    coll.datasets.push_back(std::move(ds));
  }
  require(coll.count() >= 2, "ingest",
          "collection needs at least 2 datasets, got " + std::to_string(coll.count()));
  return coll;
}

/// Uniform random sample of target_n distinct columns, reproducible from
/// seed. Datasets with n <= target_n are returned unchanged.
inline Dataset subsample(const Dataset& ds, std::size_t target_n, std::uint64_t seed) {
  require(target_n >= 1, "usage", "subsample target must be >= 1");
  const auto n = static_cast<std::size_t>(ds.size());
  if (n <= target_n) return ds;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < target_n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(target_n);
  std::sort(idx.begin(), idx.end());  // keep original column order

  Dataset out;
  out.id = ds.id;
  out.channels = ds.channels;
  out.label = ds.label;
  out.points.resize(ds.dim(), static_cast<Eigen::Index>(target_n));
  for (std::size_t i = 0; i < target_n; ++i)
    out.points.col(static_cast<Eigen::Index>(i)) =
        ds.points.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline DatasetCollection subsample(const DatasetCollection& coll, std::size_t target_n,
                                   std::uint64_t seed) {
  DatasetCollection out;
  out.channels = coll.channels;
  for (std::size_t i = 0; i < coll.datasets.size(); ++i)
    out.datasets.push_back(subsample(coll.datasets[i], target_n, derive_seed(seed, i)));
  return out;
}

}  // namespace ipca
