#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ipca/data_model.hpp"
#include "test_helpers.hpp"

using namespace ipca;
using test_helpers::TempDir;
using test_helpers::write_file;

namespace {

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<std::string>& channels,
                    const std::vector<std::pair<std::string, std::string>>& files) {
  std::string m = "{\"channels\":[";
  for (std::size_t i = 0; i < channels.size(); ++i)
    m += (i ? ",\"" : "\"") + channels[i] + "\"";
  m += "],\"datasets\":[";
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) m += ",";
    m += "{\"id\":\"" + files[i].first + "\",\"path\":\"" + files[i].second + "\"}";
  }
  m += "]}";
  write_file(dir / "manifest.json", m);
}

}  // namespace

TEST_CASE("load_collection ingests well-formed CSVs") {
  TempDir dir("load");
  const std::string body = "a,b,c\n1,2,3\n4,5,6\n7,8,9\n0,1,2\n3,4,5\n";
  write_file(dir.path / "p1.csv", body);
  write_file(dir.path / "p2.csv", body);
  write_manifest(dir.path, {"a", "b", "c"}, {{"p1", "p1.csv"}, {"p2", "p2.csv"}});

  auto coll = load_collection(dir.path / "manifest.json");
  REQUIRE(coll.count() == 2);
  REQUIRE(coll.dim() == 3);
  REQUIRE(coll.datasets[0].size() == 5);
  // transposed to d x n: first observation row becomes first column
  CHECK(coll.datasets[0].points(0, 0) == 1.0);
  CHECK(coll.datasets[0].points(2, 0) == 3.0);
  CHECK(coll.datasets[1].points(1, 4) == 4.0);

  // deterministic: loading again gives the identical in-memory collection
  auto again = load_collection(dir.path / "manifest.json");
  CHECK(again.datasets[0].points == coll.datasets[0].points);
  CHECK(again.datasets[1].points == coll.datasets[1].points);
}

TEST_CASE("load_collection rejects channel order mismatch") {
  TempDir dir("chan");
  write_file(dir.path / "p1.csv", "a,b,c\n1,2,3\n");
  write_file(dir.path / "p2.csv", "a,c,b\n1,2,3\n");
  write_manifest(dir.path, {"a", "b", "c"}, {{"p1", "p1.csv"}, {"p2", "p2.csv"}});
  CHECK_THROWS_WITH(load_collection(dir.path / "manifest.json"),
                    Catch::Matchers::ContainsSubstring("channel mismatch"));
}

TEST_CASE("load_collection rejects a single-dataset manifest") {
  TempDir dir("single");
  write_file(dir.path / "p1.csv", "a\n1\n");
  write_manifest(dir.path, {"a"}, {{"p1", "p1.csv"}});
  CHECK_THROWS_WITH(load_collection(dir.path / "manifest.json"),
                    Catch::Matchers::ContainsSubstring("at least 2"));
}

TEST_CASE("load_collection names file, row, and column for bad values") {
  TempDir dir("badval");
  write_file(dir.path / "p1.csv", "a,b\n1,2\n3,oops\n");
  write_file(dir.path / "p2.csv", "a,b\n1,2\n");
  write_manifest(dir.path, {"a", "b"}, {{"p1", "p1.csv"}, {"p2", "p2.csv"}});
  try {
    load_collection(dir.path / "manifest.json");
    FAIL("expected ingestion error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("p1.csv") != std::string::npos);
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
}

TEST_CASE("load_collection reports missing data files") {
  TempDir dir("missing");
  write_manifest(dir.path, {"a"}, {{"p1", "p1.csv"}, {"p2", "p2.csv"}});
  CHECK_THROWS_WITH(load_collection(dir.path / "manifest.json"),
                    Catch::Matchers::ContainsSubstring("not found"));
}

TEST_CASE("subsample is deterministic and a strict subset") {
  Dataset ds;
  ds.id = "big";
  ds.channels = {"x"};
  ds.points = test_helpers::random_matrix(1, 5000, 42);
  ds.label = "tag";

  auto s1 = subsample(ds, 500, 7);
  auto s2 = subsample(ds, 500, 7);
  REQUIRE(s1.size() == 500);
  CHECK(s1.points == s2.points);
  CHECK(s1.label == ds.label);
  CHECK(s1.channels == ds.channels);

  // every sampled column exists in the source, no duplicates
  std::set<double> source(ds.points.data(), ds.points.data() + ds.points.size());
  std::set<double> picked;
  for (Eigen::Index c = 0; c < s1.size(); ++c) {
    CHECK(source.count(s1.points(0, c)) == 1);
    picked.insert(s1.points(0, c));
  }
  CHECK(picked.size() == 500);

  auto s3 = subsample(ds, 500, 8);
  CHECK(s3.points != s1.points);
}

TEST_CASE("subsample is a no-op at or below the target") {
  Dataset ds;
  ds.id = "small";
  ds.channels = {"x"};
  ds.points = test_helpers::random_matrix(1, 300, 1);
  CHECK(subsample(ds, 500, 7).points == ds.points);
  ds.points = test_helpers::random_matrix(1, 500, 2);
  CHECK(subsample(ds, 500, 7).points == ds.points);
  CHECK_THROWS_AS(subsample(ds, 0, 7), Error);
}
