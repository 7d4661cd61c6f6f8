// Command-line surface for the IPCA library: dissimilarity matrices, the
// IPCA projection search, FINE embeddings, synthetic data generation, and
// the synthetic PCA/ICA comparison benchmark. All randomness flows from
// explicit seeds and all outputs are written atomically.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ipca/benchmark.hpp"
#include "ipca/fine.hpp"
#include "ipca/io.hpp"
#include "ipca/synthgen.hpp"

namespace fs = std::filesystem;
using namespace ipca;

namespace {

BandwidthRule parse_bandwidth(const std::string& spec) {
  if (spec == "silverman") return BandwidthRule::silverman();
  if (spec.rfind("fixed:", 0) == 0) {
    try {
      return BandwidthRule::fixed(std::stod(spec.substr(6)));
    } catch (const std::exception&) {
      throw Error("usage", "cannot parse fixed bandwidth: " + spec);
    }
  }
  throw Error("usage", "bandwidth must be 'silverman' or 'fixed:<h>', got: " + spec);
}

struct CommonFlags {
  std::string manifest;
  std::string bandwidth = "silverman";
  std::uint64_t seed = 0;
  std::optional<std::size_t> subsample_n;
  std::string out = "out";
};

DatasetCollection load_input(const CommonFlags& flags) {
  auto coll = load_collection(flags.manifest);
  if (flags.subsample_n) coll = subsample(coll, *flags.subsample_n, flags.seed);
  return coll;
}

void write_dissimilarity(const DissimilarityMatrix& d, const fs::path& dir,
                         const std::string& stem) {
  atomic_write(dir / (stem + ".csv"), dissimilarity_to_csv(d));
  atomic_write(dir / (stem + ".json"), dissimilarity_to_json(d).dump(2) + "\n");
}

/// Loads a cached D(X) if present and consistent with the collection,
/// otherwise computes it and populates the cache.
DissimilarityMatrix full_dissimilarity(const DatasetCollection& coll,
                                       const BandwidthRule& rule,
                                       const std::optional<std::string>& cache_path) {
  if (cache_path && fs::exists(*cache_path)) {
    auto cached = load_dissimilarity(*cache_path);
    auto want = coll.ids();
    if (cached.ids != want) {
      std::string diff = "cache has " + std::to_string(cached.ids.size()) +
                         " ids, collection has " + std::to_string(want.size());
      for (std::size_t i = 0; i < std::min(cached.ids.size(), want.size()); ++i)
        if (cached.ids[i] != want[i]) {
          diff += "; first mismatch at index " + std::to_string(i) + ": '" +
                  cached.ids[i] + "' vs '" + want[i] + "'";
          break;
        }
      throw Error("mismatch", "dissimilarity cache does not match collection (" + diff + ")");
    }
    return cached;
  }
  auto d = dissimilarity_matrix(coll, rule);
  if (cache_path) atomic_write(*cache_path, dissimilarity_to_json(d).dump(2) + "\n");
  return d;
}

int cmd_dkl(const CommonFlags& flags) {
  auto coll = load_input(flags);
  auto d = dissimilarity_matrix(coll, parse_bandwidth(flags.bandwidth));
  write_dissimilarity(d, flags.out, "dkl");
  std::cout << "wrote " << (fs::path(flags.out) / "dkl.csv").string() << " and dkl.json\n";
  return 0;
}

int cmd_ipca(const CommonFlags& flags, OptimizerConfig config, int restarts,
             const std::optional<std::string>& dkl_cache) {
  auto coll = load_input(flags);
  auto rule = parse_bandwidth(flags.bandwidth);
  auto d_full = full_dissimilarity(coll, rule, dkl_cache);
  config.seed = flags.seed;

  auto result = optimize_with_restarts(coll, config, d_full, rule, restarts);
  const fs::path out = flags.out;
  atomic_write(out / "projection.json", projection_to_json(result.a).dump(2) + "\n");
  atomic_write(out / "trace.json", trace_to_json(result.trace).dump(2) + "\n");
  atomic_write(out / "variable_selection.csv",
               variable_selection_to_csv(
                   variable_selection_report(result.a, coll.channels)));

  std::vector<std::string> proj_channels;
  for (Eigen::Index c = 0; c < config.m; ++c)
    proj_channels.push_back("c" + std::to_string(c + 1));
  for (const auto& ds : coll.datasets) {
    Matrix projected = result.a.values * ds.points;
    atomic_write(out / "projected" / (ds.id + ".csv"),
                 points_to_csv(projected, proj_channels));
    if (config.m == 2) {
      auto model = fit_kde(projected, rule);
      const double pad = 3.0 * model.bandwidth;
      std::vector<std::pair<double, double>> bounds;
      for (Eigen::Index r = 0; r < 2; ++r)
        bounds.emplace_back(projected.row(r).minCoeff() - pad,
                            projected.row(r).maxCoeff() + pad);
      atomic_write(out / "grids" / (ds.id + ".csv"),
                   density_grid_to_csv(density_grid(model, bounds, {64, 64})));
    }
  }
  std::cout << "converged=" << (result.trace.converged ? "yes" : "no")
            << " iterations=" << result.trace.iterations << " per_pair_objective="
            << result.trace.records.back().per_pair_objective << "\n"
            << "wrote " << (out / "projection.json").string() << "\n";
  return 0;
}

int cmd_fine(const CommonFlags& flags, Eigen::Index e,
             const std::optional<std::string>& projection_path) {
  auto coll = load_input(flags);
  auto rule = parse_bandwidth(flags.bandwidth);
  if (projection_path) {
    auto a = load_projection(*projection_path);
    require(a.d() == coll.dim(), "mismatch",
            "projection width does not match collection dimension");
    for (auto& ds : coll.datasets) {
      ds.points = a.values * ds.points;
      ds.channels.clear();
      for (Eigen::Index c = 0; c < a.m(); ++c)
        ds.channels.push_back("c" + std::to_string(c + 1));
    }
    coll.channels = coll.datasets.front().channels;
  }
  require(e < static_cast<Eigen::Index>(coll.count()), "usage",
          "embedding dimension must be below the dataset count");
  auto emb = fine(coll, e, rule);
  atomic_write(fs::path(flags.out) / "embedding.csv", embedding_to_csv(emb));
  std::cout << "wrote " << (fs::path(flags.out) / "embedding.csv").string() << "\n";
  return 0;
}

int cmd_benchmark(int folds, std::uint64_t seed, const std::string& bandwidth,
                  const OptimizerConfig& config, int restarts, const std::string& out) {
  BenchmarkParams params;
  params.rule = parse_bandwidth(bandwidth);
  params.config = config;
  params.restarts = restarts;
  auto summary = run_benchmark(folds, seed, params);
  atomic_write(fs::path(out) / "benchmark.csv", benchmark_to_csv(summary));
  atomic_write(fs::path(out) / "benchmark.json", benchmark_to_json(summary).dump(2) + "\n");
  std::cout << "per-pair objective means: ipca=" << summary.ipca_mean
            << " ica=" << summary.ica_mean << " pca=" << summary.pca_mean << "\n"
            << "wrote " << (fs::path(out) / "benchmark.csv").string() << "\n";
  return 0;
}

int cmd_synth(std::size_t n1, std::size_t n2, std::size_t points, double df,
              std::uint64_t seed, const std::string& out) {
  auto coll = make_mirror_collection(n1, n2, points, df, seed);
  write_collection(coll, out);
  std::cout << "wrote " << (fs::path(out) / "manifest.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-preserving projections for collections of datasets"};
  app.require_subcommand(1);

  CommonFlags flags;
  OptimizerConfig config;
  int restarts = 1;
  std::optional<std::string> dkl_cache;
  std::string grad = "analytic";
  Eigen::Index e = 2;
  std::optional<std::string> projection_path;
  int folds = 10;
  std::size_t n1 = 5, n2 = 5, points = 400;
  double df = 4.0;
  std::string bench_bandwidth = "fixed:1.1";

  auto add_common = [&](CLI::App* cmd, bool needs_manifest = true) {
    if (needs_manifest)
      cmd->add_option("--manifest", flags.manifest, "collection manifest (JSON)")->required();
    cmd->add_option("--bandwidth", flags.bandwidth, "silverman or fixed:<h>");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--subsample", flags.subsample_n, "subsample each dataset to N points");
    cmd->add_option("--out", flags.out, "output directory");
  };

  auto* dkl = app.add_subcommand("dkl", "compute the symmetrized-KL dissimilarity matrix");
  add_common(dkl);

  auto* ipca = app.add_subcommand("ipca", "search for the information-preserving projection");
  add_common(ipca);
  ipca->add_option("--m", config.m, "projection dimension");
  ipca->add_option("--mu", config.mu, "initial step size");
  ipca->add_option("--max-iters", config.max_iters, "iteration cap");
  ipca->add_option("--tol", config.tol, "relative objective convergence threshold");
  ipca->add_option("--grad", grad, "gradient mode: analytic or fd");
  ipca->add_option("--fd-epsilon", config.fd_epsilon, "finite-difference step");
  ipca->add_option("--restarts", restarts, "best-of-R random restarts");
  ipca->add_option("--dkl-cache", dkl_cache, "cache path for the full-space matrix (JSON)");

  auto* fine_cmd = app.add_subcommand("fine", "embed the collection's densities via FINE");
  add_common(fine_cmd);
  fine_cmd->add_option("--e", e, "embedding dimension");
  fine_cmd->add_option("--use-projection", projection_path,
                       "project with this matrix (JSON) before embedding");

  auto* bench = app.add_subcommand("benchmark", "synthetic IPCA/PCA/ICA comparison");
  bench->add_option("--folds", folds, "number of folds");
  bench->add_option("--seed", flags.seed, "master seed");
  bench->add_option("--bandwidth", bench_bandwidth, "silverman or fixed:<h>");
  bench->add_option("--mu", config.mu, "initial step size");
  bench->add_option("--max-iters", config.max_iters, "iteration cap");
  bench->add_option("--tol", config.tol, "relative objective convergence threshold");
  bench->add_option("--restarts", restarts, "best-of-R random restarts");
  bench->add_option("--out", flags.out, "output directory");

  auto* synth = app.add_subcommand("synth", "write a mirror-image synthetic collection");
  synth->add_option("--n1", n1, "class-1 dataset count");
  synth->add_option("--n2", n2, "class-2 dataset count");
  synth->add_option("--points", points, "points per dataset");
  synth->add_option("--df", df, "chi-squared degrees of freedom");
  synth->add_option("--seed", flags.seed, "random seed");
  synth->add_option("--out", flags.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dkl->parsed()) return cmd_dkl(flags);
    if (ipca->parsed()) {
      if (grad == "analytic")
        config.grad_mode = GradMode::analytic_frozen_bandwidth;
      else if (grad == "fd")
        config.grad_mode = GradMode::finite_difference;
      else
        throw Error("usage", "gradient mode must be 'analytic' or 'fd', got: " + grad);
      return cmd_ipca(flags, config, restarts, dkl_cache);
    }
    if (fine_cmd->parsed()) return cmd_fine(flags, e, projection_path);
    if (bench->parsed())
      return cmd_benchmark(folds, flags.seed, bench_bandwidth, config, restarts, flags.out);
    if (synth->parsed()) return cmd_synth(n1, n2, points, df, flags.seed, flags.out);
  } catch (const Error& e) {
    std::cerr << "error:" << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
