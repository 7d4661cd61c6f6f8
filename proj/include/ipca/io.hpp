#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipca/common.hpp"
#include "ipca/data_model.hpp"
#include "ipca/density.hpp"
#include "ipca/divergence.hpp"
#include "ipca/fine.hpp"
#include "ipca/optimizer.hpp"

namespace ipca {

/// Writes content to path atomically: temp file in the same directory, then
/// rename. A killed process never leaves a half-written artifact.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "io", "cannot open for writing: " + tmp.string());
    out << content;
    require(out.good(), "io", "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "io", "rename failed for " + path.string() + ": " + ec.message());
}

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace detail

// ---- dissimilarity matrices ------------------------------------------------

inline std::string dissimilarity_to_csv(const DissimilarityMatrix& d) {
  std::ostringstream ss;
  if (!d.ids.empty()) {
    for (std::size_t i = 0; i < d.ids.size(); ++i)
      ss << (i ? "," : "") << d.ids[i];
    ss << "\n";
  }
  for (Eigen::Index r = 0; r < d.count(); ++r) {
    for (Eigen::Index c = 0; c < d.count(); ++c)
      ss << (c ? "," : "") << detail::format_double(d.values(r, c));
    ss << "\n";
  }
  return ss.str();
}

inline nlohmann::json dissimilarity_to_json(const DissimilarityMatrix& d) {
  nlohmann::json j;
  j["kind"] = d.kind == DissimilarityMatrix::Kind::kl_symmetric ? "kl_symmetric"
                                                                : "fisher_geodesic";
  j["ids"] = d.ids;
  std::vector<std::vector<double>> rows;
  for (Eigen::Index r = 0; r < d.count(); ++r) {
    std::vector<double> row(d.count());
    for (Eigen::Index c = 0; c < d.count(); ++c) row[c] = d.values(r, c);
    rows.push_back(std::move(row));
  }
  j["values"] = rows;
  return j;
}

inline DissimilarityMatrix dissimilarity_from_json(const nlohmann::json& j) {
  DissimilarityMatrix d;
  d.kind = j.at("kind").get<std::string>() == "fisher_geodesic"
               ? DissimilarityMatrix::Kind::fisher_geodesic
               : DissimilarityMatrix::Kind::kl_symmetric;
  d.ids = j.at("ids").get<std::vector<std::string>>();
  auto rows = j.at("values").get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.values.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    require(static_cast<Eigen::Index>(rows[r].size()) == n, "io",
            "dissimilarity JSON is not square");
    for (Eigen::Index c = 0; c < n; ++c) d.values(r, c) = rows[r][c];
  }
  return d;
}

inline DissimilarityMatrix load_dissimilarity(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "io", "cannot open dissimilarity file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("io", "dissimilarity parse error in " + path.string() + ": " + e.what());
  }
  return dissimilarity_from_json(j);
}

inline DissimilarityMatrix dissimilarity_from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "io", "cannot open dissimilarity CSV: " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_csv_line(line);
    if (first) {
      first = false;
      // A header of dataset ids is optional; detect by non-numeric first cell.
      char* end = nullptr;
      std::strtod(fields[0].c_str(), &end);
      if (end == fields[0].c_str()) {
        ids = fields;
        continue;
      }
    }
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(std::stod(f));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  require(n >= 2, "io", "dissimilarity CSV has fewer than 2 rows");
  DissimilarityMatrix d;
  d.ids = ids;
  d.values.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    require(static_cast<Eigen::Index>(rows[r].size()) == n, "io",
            "dissimilarity CSV is not square");
    for (Eigen::Index c = 0; c < n; ++c) d.values(r, c) = rows[r][c];
  }
  return d;
}

// ---- projection matrices and traces ---------------------------------------

inline nlohmann::json projection_to_json(const ProjectionMatrix& a) {
  nlohmann::json j;
  j["m"] = a.m();
  j["d"] = a.d();
  std::vector<double> values;
  for (Eigen::Index r = 0; r < a.m(); ++r)
    for (Eigen::Index c = 0; c < a.d(); ++c) values.push_back(a.values(r, c));
  j["values"] = values;  // row-major
  return j;
}

inline ProjectionMatrix projection_from_json(const nlohmann::json& j) {
  const auto m = j.at("m").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  auto values = j.at("values").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == m * d, "io",
          "projection JSON has wrong value count");
  ProjectionMatrix a;
  a.values.resize(m, d);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < d; ++c) a.values(r, c) = values[r * d + c];
  a.validate();
  return a;
}

inline ProjectionMatrix load_projection(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "io", "cannot open projection file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("io", "projection parse error in " + path.string() + ": " + e.what());
  }
  return projection_from_json(j);
}

inline nlohmann::json trace_to_json(const OptimizerTrace& trace) {
  nlohmann::json j;
  j["converged"] = trace.converged;
  j["iterations"] = trace.iterations;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"iteration", r.iteration},
                       {"objective", r.objective},
                       {"per_pair_objective", r.per_pair_objective},
                       {"step", r.step},
                       {"constraint_residual", r.constraint_residual},
                       {"backtracked", r.backtracked}});
  }
  j["records"] = records;
  if (!trace.records.empty()) {
    j["final_objective"] = trace.records.back().objective;
    j["final_per_pair_objective"] = trace.records.back().per_pair_objective;
  }
  return j;
}

// ---- CSV artifacts ---------------------------------------------------------

inline std::string embedding_to_csv(const EmbeddingResult& emb) {
  std::ostringstream ss;
  ss << "id,label";
  for (Eigen::Index c = 0; c < emb.coordinates.cols(); ++c) ss << ",coord_" << (c + 1);
  ss << "\n";
  for (Eigen::Index r = 0; r < emb.coordinates.rows(); ++r) {
    ss << (r < static_cast<Eigen::Index>(emb.ids.size()) ? emb.ids[r] : "") << ",";
    if (r < static_cast<Eigen::Index>(emb.labels.size()) && emb.labels[r])
      ss << *emb.labels[r];
    for (Eigen::Index c = 0; c < emb.coordinates.cols(); ++c)
      ss << "," << detail::format_double(emb.coordinates(r, c));
    ss << "\n";
  }
  return ss.str();
}

/// Points written observation-per-row, matching the ingestion layout.
inline std::string points_to_csv(const Matrix& points,
                                 const std::vector<std::string>& channels) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < channels.size(); ++i) ss << (i ? "," : "") << channels[i];
  ss << "\n";
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    for (Eigen::Index r = 0; r < points.rows(); ++r)
      ss << (r ? "," : "") << detail::format_double(points(r, c));
    ss << "\n";
  }
  return ss.str();
}

inline std::string density_grid_to_csv(const DensityGrid& grid) {
  std::ostringstream ss;
  if (grid.axes.size() == 1) {
    ss << "x,density\n";
    for (Eigen::Index i = 0; i < grid.axes[0].size(); ++i)
      ss << detail::format_double(grid.axes[0](i)) << ","
         << detail::format_double(grid.values(i)) << "\n";
  } else {
    ss << "x,y,density\n";
    const auto ny = grid.axes[1].size();
    for (Eigen::Index i = 0; i < grid.axes[0].size(); ++i)
      for (Eigen::Index j = 0; j < ny; ++j)
        ss << detail::format_double(grid.axes[0](i)) << ","
           << detail::format_double(grid.axes[1](j)) << ","
           << detail::format_double(grid.values(i * ny + j)) << "\n";
  }
  return ss.str();
}

inline std::string variable_selection_to_csv(const std::vector<ChannelScore>& scores) {
  std::ostringstream ss;
  ss << "rank,channel,score,loadings\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ss << (i + 1) << "," << scores[i].channel << ","
       << detail::format_double(scores[i].score) << ",\"";
    for (Eigen::Index r = 0; r < scores[i].loadings.size(); ++r)
      ss << (r ? ";" : "") << detail::format_double(scores[i].loadings(r));
    ss << "\"\n";
  }
  return ss.str();
}

/// Writes a collection as manifest + per-dataset CSVs into a directory.
inline void write_collection(const DatasetCollection& coll,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["channels"] = coll.channels;
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& ds : coll.datasets) {
    std::string file = ds.id + ".csv";
    atomic_write(dir / file, points_to_csv(ds.points, ds.channels));
    nlohmann::json entry = {{"id", ds.id}, {"path", file}};
    if (ds.label) entry["label"] = *ds.label;
    datasets.push_back(entry);
  }
  manifest["datasets"] = datasets;
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ipca
