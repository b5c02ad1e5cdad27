#include <doctest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ulv/dataset.hpp"
#include "ulv/errors.hpp"

using namespace ulv;
namespace fs = std::filesystem;

namespace {

const std::string kData = ULV_TEST_DATA_DIR;

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ulv_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
}

void write_edge_list(const fs::path& dir, const std::string& edges, const std::string& features,
                     const std::string& labels, const std::string& masks = "") {
  put(dir / "edges.txt", edges);
  put(dir / "features.csv", features);
  put(dir / "labels.txt", labels);
  if (!masks.empty()) put(dir / "masks.txt", masks);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("edge list round trip") {
  TempDir tmp("edgelist");
  write_edge_list(tmp.path, "0 1\n1 2\n", "0.5,1.0\n-1.0,2.0\n0.0,0.25\n", "0\n1\n0\n",
                  "train\nval\ntest\n");
  Graph g = load_edge_list_dir(tmp.path);
  CHECK(g.n == 3);
  CHECK(g.dim == 2);
  CHECK(g.edges.size() == 2);
  CHECK(g.num_classes == 2);
  CHECK(g.features(1, 0) == doctest::Approx(-1.0));
  CHECK(g.masks[0] == Mask::Train);
  CHECK(g.masks[1] == Mask::Val);
  CHECK(g.masks[2] == Mask::Test);
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("edge list defaults to train masks when masks.txt is absent") {
  TempDir tmp("nomask");
  write_edge_list(tmp.path, "0 1\n", "1.0\n2.0\n", "0\n1\n");
  Graph g = load_edge_list_dir(tmp.path);
  CHECK(g.nodes_with_mask(Mask::Train).size() == 2);
}

TEST_CASE("edge list duplicate edges merge") {
  TempDir tmp("dup");
  write_edge_list(tmp.path, "0 1\n1 0\n0 1\n", "1.0\n2.0\n", "0\n0\n");
  CHECK(load_edge_list_dir(tmp.path).edges.size() == 1);
}

TEST_CASE("edge list rejects self loops") {
  TempDir tmp("selfloop");
  write_edge_list(tmp.path, "0 1\n1 1\n", "1.0\n2.0\n", "0\n0\n");
  CHECK_THROWS_AS(load_edge_list_dir(tmp.path), IntegrityError);
}

TEST_CASE("edge list rejects dangling endpoints") {
  TempDir tmp("dangling");
  write_edge_list(tmp.path, "0 5\n", "1.0\n2.0\n", "0\n0\n");
  CHECK_THROWS_AS(load_edge_list_dir(tmp.path), IntegrityError);
}

TEST_CASE("edge list rejects ragged feature rows") {
  TempDir tmp("ragged");
  write_edge_list(tmp.path, "0 1\n", "1.0,2.0\n3.0\n", "0\n0\n");
  CHECK_THROWS_AS(load_edge_list_dir(tmp.path), IntegrityError);
}

TEST_CASE("edge list parse errors carry the line number") {
  TempDir tmp("badline");
  write_edge_list(tmp.path, "0 1\nnot an edge\n", "1.0\n2.0\n", "0\n0\n");
  try {
    load_edge_list_dir(tmp.path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("edge list rejects label count mismatch and bad labels") {
  TempDir tmp("labels");
  write_edge_list(tmp.path, "0 1\n", "1.0\n2.0\n", "0\n");
  CHECK_THROWS_AS(load_edge_list_dir(tmp.path), IntegrityError);
  put(tmp.path / "labels.txt", "0\n-2\n");
  CHECK_THROWS_AS(load_edge_list_dir(tmp.path), ParseError);
}

TEST_CASE("planetoid loader rejects directories holding several datasets") {
  // tests/data carries ind.tiny.*, ind.tinygap.* and ind.tinyhi.* side by side
  CHECK_THROWS_AS(load_planetoid_raw(kData), IntegrityError);
}

TEST_CASE("planetoid tiny fixture at binary protocols") {
  std::string prefix;
  SUBCASE("protocol 2") { prefix = "tiny"; }
  SUBCASE("protocol 5") { prefix = "tinyhi"; }
  TempDir tmp("planetoid_" + prefix);
  for (const char* suffix : {"x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"}) {
    fs::copy_file(fs::path(kData) / ("ind." + prefix + "." + suffix),
                  tmp.path / ("ind." + prefix + "." + suffix));
  }
  Graph g = load_planetoid_raw(tmp.path);
  CHECK(g.n == 12);
  CHECK(g.dim == 6);
  CHECK(g.num_classes == 3);
  CHECK_NOTHROW(g.validate());

  // allx rows 0..7 keep file order; labels one-hot at i % 3
  for (NodeId v = 0; v < 8; ++v) CHECK(g.labels[v] == v % 3);
  // test rows scatter: index file order 9,8,11,10 with ty one-hot at (row+1) % 3
  CHECK(g.labels[9] == 1);
  CHECK(g.labels[8] == 2);
  CHECK(g.labels[11] == 0);
  CHECK(g.labels[10] == 1);

  // masks: train = first |y| rows, test = published indices, val = next 500 capped
  for (NodeId v = 0; v < 5; ++v) CHECK(g.masks[v] == Mask::Train);
  for (NodeId v = 5; v < 8; ++v) CHECK(g.masks[v] == Mask::Val);
  for (NodeId v = 8; v < 12; ++v) CHECK(g.masks[v] == Mask::Test);

  // self reference in ind.tiny.graph is skipped, duplicate edge merged
  CHECK(g.edges.size() == 12);
  CHECK(g.edges.contains(make_edge(2, 10)));
  CHECK_FALSE(g.edges.contains(make_edge(3, 3)));
}

TEST_CASE("planetoid gap fixture pads the missing test index") {
  TempDir tmp("gap");
  for (const char* suffix : {"x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"}) {
    fs::copy_file(fs::path(kData) / (std::string("ind.tinygap.") + suffix),
                  tmp.path / (std::string("ind.tinygap.") + suffix));
  }
  Graph g = load_planetoid_raw(tmp.path);
  CHECK(g.n == 12);
  // node 10 is the hole: zero features, class 0, no split membership
  for (size_t j = 0; j < g.dim; ++j) CHECK(g.features(10, j) == 0.0);
  CHECK(g.labels[10] == 0);
  CHECK(g.masks[10] == Mask::None);
  CHECK(g.masks[11] == Mask::Test);
  CHECK(g.edges.contains(make_edge(9, 11)));
}

TEST_CASE("load_dataset dispatches and rejects unknown formats") {
  TempDir tmp("dispatch");
  write_edge_list(tmp.path, "0 1\n", "1.0\n2.0\n", "0\n1\n");
  CHECK(load_dataset(tmp.path, "edge-list").n == 2);
  CHECK_THROWS_AS(load_dataset(tmp.path, "json"), ArgumentError);
}

// Counts cross-checked against an independent parser of the published files.
// Runs only when a real planetoid directory is supplied.
TEST_CASE("cora counts when the published files are available") {
  const char* dir = std::getenv("ULV_CORA_DIR");
  if (!dir) return;
  Graph g = load_planetoid_raw(dir);
  CHECK(g.n == 2708);
  CHECK(g.dim == 1433);
  CHECK(g.num_classes == 7);
}

}  // TEST_SUITE
