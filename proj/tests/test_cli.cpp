#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ipca/io.hpp"
#include "ipca/synthgen.hpp"
#include "test_helpers.hpp"

using namespace ipca;
using test_helpers::TempDir;
using test_helpers::read_file;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const TempDir& dir) {
  auto out_path = dir.path / "stdout.txt";
  auto err_path = dir.path / "stderr.txt";
  std::string cmd = std::string(IPCA_CLI_PATH) + " " + args + " > " +
                    out_path.string() + " 2> " + err_path.string();
  int status = std::system(cmd.c_str());
  int code = (status >= 256) ? status / 256 : status;
  return {code, read_file(out_path), read_file(err_path)};
}

}  // namespace

TEST_CASE("synth then dkl produces a loadable dissimilarity matrix") {
  TempDir dir("cli_dkl");
  auto synth_out = (dir.path / "data").string();
  auto r1 = run_cli("synth --n1 2 --n2 2 --points 60 --seed 4 --out " + synth_out, dir);
  REQUIRE(r1.exit_code == 0);

  auto coll = load_collection(dir.path / "data" / "manifest.json");
  CHECK(coll.count() == 4);
  CHECK(coll.datasets[0].label == "class1");

  auto out = (dir.path / "dkl_out").string();
  auto r2 = run_cli("dkl --manifest " + synth_out + "/manifest.json --bandwidth fixed:1.1 --out " + out, dir);
  REQUIRE(r2.exit_code == 0);

  auto d = load_dissimilarity(dir.path / "dkl_out" / "dkl.json");
  REQUIRE(d.count() == 4);
  CHECK(d.ids == coll.ids());
  CHECK(d.values.isApprox(d.values.transpose()));
  CHECK(d.values.diagonal().isZero());
  CHECK((d.values.array() >= 0.0).all());

  auto d_csv = dissimilarity_from_csv(dir.path / "dkl_out" / "dkl.csv");
  CHECK(d_csv.ids == d.ids);
  CHECK(d_csv.values.isApprox(d.values, 1e-14));
}

TEST_CASE("ipca command writes a feasible projection and is seed-deterministic") {
  TempDir dir("cli_ipca");
  auto data = (dir.path / "data").string();
  REQUIRE(run_cli("synth --n1 2 --n2 2 --points 80 --seed 11 --out " + data, dir)
              .exit_code == 0);

  std::string common = "ipca --manifest " + data +
                       "/manifest.json --bandwidth fixed:1.1 --m 1 --seed 5 "
                       "--max-iters 30 --out ";
  auto out1 = (dir.path / "run1").string();
  auto r = run_cli(common + out1, dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("per_pair_objective=") != std::string::npos);

  auto a = load_projection(dir.path / "run1" / "projection.json");
  CHECK(a.m() == 1);
  CHECK(a.d() == 2);
  CHECK(a.orthonormality_residual() <= 1e-8);

  nlohmann::json trace;
  std::ifstream(dir.path / "run1" / "trace.json") >> trace;
  REQUIRE(trace.contains("records"));
  CHECK(trace["records"].size() >= 2);
  double first = trace["records"].front()["objective"].get<double>();
  double last = trace["records"].back()["objective"].get<double>();
  CHECK(last <= first);
  CHECK(trace["final_objective"].get<double>() == last);

  std::string vs = read_file(dir.path / "run1" / "variable_selection.csv");
  CHECK(vs.rfind("rank,channel,score,loadings", 0) == 0);
  CHECK(std::filesystem::exists(dir.path / "run1" / "projected" / "class1_1.csv"));

  auto out2 = (dir.path / "run2").string();
  REQUIRE(run_cli(common + out2, dir).exit_code == 0);
  CHECK(read_file(dir.path / "run1" / "projection.json") ==
        read_file(dir.path / "run2" / "projection.json"));
}

TEST_CASE("ipca with m=2 writes density grids") {
  TempDir dir("cli_grid");
  auto data = (dir.path / "data").string();
  REQUIRE(run_cli("synth --n1 2 --n2 1 --points 50 --seed 2 --out " + data, dir)
              .exit_code == 0);
  auto out = (dir.path / "run").string();
  auto r = run_cli("ipca --manifest " + data +
                       "/manifest.json --bandwidth fixed:1.1 --m 2 --max-iters 3 --out " +
                       out,
                   dir);
  REQUIRE(r.exit_code == 0);
  std::string grid = read_file(dir.path / "run" / "grids" / "class1_1.csv");
  CHECK(grid.rfind("x,y,density", 0) == 0);
  // 64 x 64 grid plus header
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 64 * 64 + 1);
}

TEST_CASE("dkl cache is reused and mismatches are rejected") {
  TempDir dir("cli_cache");
  auto data = (dir.path / "data").string();
  auto other = (dir.path / "other").string();
  REQUIRE(run_cli("synth --n1 2 --n2 2 --points 60 --seed 1 --out " + data, dir)
              .exit_code == 0);
  REQUIRE(run_cli("synth --n1 3 --n2 1 --points 60 --seed 1 --out " + other, dir)
              .exit_code == 0);

  auto cache = (dir.path / "cache.json").string();
  std::string base = "ipca --bandwidth fixed:1.1 --m 1 --max-iters 5 --dkl-cache " + cache;
  REQUIRE(run_cli(base + " --manifest " + data + "/manifest.json --out " +
                      (dir.path / "a").string(),
                  dir)
              .exit_code == 0);
  REQUIRE(std::filesystem::exists(cache));
  // second run with the cache present still succeeds
  REQUIRE(run_cli(base + " --manifest " + data + "/manifest.json --out " +
                      (dir.path / "b").string(),
                  dir)
              .exit_code == 0);
  // a different collection must be refused with a machine-parsable code
  auto r = run_cli(base + " --manifest " + other + "/manifest.json --out " +
                       (dir.path / "c").string(),
                   dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("error:mismatch:", 0) == 0);
}

TEST_CASE("fine command writes an embedding CSV with labels") {
  TempDir dir("cli_fine");
  auto data = (dir.path / "data").string();
  REQUIRE(run_cli("synth --n1 3 --n2 3 --points 80 --seed 6 --out " + data, dir)
              .exit_code == 0);
  auto out = (dir.path / "emb").string();
  auto r = run_cli("fine --manifest " + data +
                       "/manifest.json --bandwidth fixed:1.1 --e 2 --out " + out,
                   dir);
  REQUIRE(r.exit_code == 0);
  std::string csv = read_file(dir.path / "emb" / "embedding.csv");
  CHECK(csv.rfind("id,label,coord_1,coord_2", 0) == 0);
  CHECK(csv.find("class1_1,class1,") != std::string::npos);
  CHECK(csv.find("class2_3,class2,") != std::string::npos);
}

TEST_CASE("fine can embed through a stored projection") {
  TempDir dir("cli_fine_proj");
  auto data = (dir.path / "data").string();
  REQUIRE(run_cli("synth --n1 3 --n2 3 --points 80 --seed 7 --out " + data, dir)
              .exit_code == 0);
  auto run = (dir.path / "run").string();
  REQUIRE(run_cli("ipca --manifest " + data +
                      "/manifest.json --bandwidth fixed:1.1 --m 1 --max-iters 10 --out " +
                      run,
                  dir)
              .exit_code == 0);
  auto out = (dir.path / "emb").string();
  auto r = run_cli("fine --manifest " + data +
                       "/manifest.json --bandwidth fixed:1.1 --e 2 --use-projection " +
                       run + "/projection.json --out " + out,
                   dir);
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir.path / "emb" / "embedding.csv"));
}

TEST_CASE("benchmark command reports all three methods") {
  TempDir dir("cli_bench");
  auto out = (dir.path / "bench").string();
  auto r = run_cli("benchmark --folds 1 --seed 3 --max-iters 40 --out " + out, dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("ipca=") != std::string::npos);
  nlohmann::json j;
  std::ifstream(dir.path / "bench" / "benchmark.json") >> j;
  REQUIRE(j["folds"].size() == 1);
  CHECK(j["folds"][0].contains("ipca"));
  CHECK(j["folds"][0].contains("ica"));
  CHECK(j["folds"][0].contains("pca"));
  CHECK(j["mean"].contains("ipca"));
  std::string csv = read_file(dir.path / "bench" / "benchmark.csv");
  CHECK(csv.rfind("fold,seed,ipca,ica,pca,ipca_dim1_loading", 0) == 0);
}

TEST_CASE("CLI errors carry machine-parsable codes") {
  TempDir dir("cli_err");
  auto r1 = run_cli("dkl --manifest " + (dir.path / "missing.json").string() +
                        " --out " + (dir.path / "o").string(),
                    dir);
  CHECK(r1.exit_code == 1);
  CHECK(r1.err.rfind("error:", 0) == 0);

  auto data = (dir.path / "data").string();
  REQUIRE(run_cli("synth --n1 2 --n2 2 --points 40 --seed 1 --out " + data, dir)
              .exit_code == 0);
  auto r2 = run_cli("dkl --manifest " + data + "/manifest.json --bandwidth fixed:nope --out " +
                        (dir.path / "o").string(),
                    dir);
  CHECK(r2.exit_code == 1);
  CHECK(r2.err.rfind("error:usage:", 0) == 0);

  auto r3 = run_cli("ipca --manifest " + data + "/manifest.json --m 3 --out " +
                        (dir.path / "o").string(),
                    dir);
  CHECK(r3.exit_code == 1);
  CHECK(r3.err.rfind("error:usage:", 0) == 0);
}

TEST_CASE("projection JSON round-trips exactly") {
  ProjectionMatrix a = random_orthonormal(2, 5, 33);
  auto j = projection_to_json(a);
  auto back = projection_from_json(j);
  CHECK(back.values == a.values);

  // a non-orthonormal matrix must be rejected on load
  j["values"][0] = 5.0;
  CHECK_THROWS_AS(projection_from_json(j), Error);
}
