#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "aam/graph.hpp"

using namespace aam;

namespace {

// Independent count of unique undirected simple edges in a list.
std::uint64_t unique_undirected_edges(const EdgeList& list) {
  std::set<std::pair<VertexId, VertexId>> seen;
  for (const Edge& e : list.edges) {
    if (e.src == e.dst) continue;
    seen.emplace(std::min(e.src, e.dst), std::max(e.src, e.dst));
  }
  return seen.size();
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("build_csr mirrors a single undirected edge") {
  EdgeList list{2, false, {{0, 1, 0.0}}};
  const Graph g = build_csr(list, false);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  validate_graph(g);
}

TEST_CASE("build_csr of an empty graph") {
  EdgeList list{3, false, {}};
  const Graph g = build_csr(list, false);
  CHECK(g.row_offsets == std::vector<std::uint64_t>{0, 0, 0, 0});
  validate_graph(g);
}

TEST_CASE("build_csr drops duplicates and self loops") {
  EdgeList list{3, false, {{0, 1, 0.0}, {1, 0, 0.0}, {0, 0, 0.0}, {0, 1, 0.0}}};
  const Graph g = build_csr(list, false);
  CHECK(g.num_stored_edges() == 2);  // 0->1 and 1->0
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(2) == 0);
}

TEST_CASE("build_csr rejects out-of-range ids") {
  EdgeList list{2, false, {{0, 5, 0.0}}};
  CHECK_THROWS_AS(build_csr(list, false), ParseError);
}

TEST_CASE("kronecker csr degree sum equals twice the unique edge count") {
  const EdgeList list = generate_kronecker(10, 16, 42);
  const Graph g = build_csr(list, false);
  validate_graph(g);
  std::uint64_t sum = 0;
  for (VertexId v = 0; v < g.n; ++v) sum += g.degree(v);
  CHECK(sum == 2 * unique_undirected_edges(list));
}

TEST_CASE("kronecker counts are forced by scale and edge factor") {
  const EdgeList list = generate_kronecker(4, 16, 1);
  CHECK(list.n == 16);
  CHECK(list.edges.size() == 256);
}

TEST_CASE("kronecker is deterministic per seed") {
  CHECK(generate_kronecker(8, 8, 7) == generate_kronecker(8, 8, 7));
  CHECK(generate_kronecker(8, 8, 7) != generate_kronecker(8, 8, 8));
}

TEST_CASE("kronecker scale 14 has power-law degree skew") {
  const EdgeList list = generate_kronecker(14, 16, 3);
  const Graph g = build_csr(list, false);
  std::uint64_t max_deg = 0, sum = 0;
  for (VertexId v = 0; v < g.n; ++v) {
    max_deg = std::max<std::uint64_t>(max_deg, g.degree(v));
    sum += g.degree(v);
  }
  const double mean = static_cast<double>(sum) / g.n;
  CHECK(static_cast<double>(max_deg) / mean > 10.0);
}

TEST_CASE("erdos-renyi edge cases") {
  CHECK(generate_erdos_renyi(100, 0.0, 1).edges.empty());
  const EdgeList k4 = generate_erdos_renyi(4, 1.0, 1);
  CHECK(k4.edges.size() == 6);
}

TEST_CASE("erdos-renyi edge count is within 5 sigma of the binomial mean") {
  const VertexId n = 1 << 12;
  const double p = 0.005;
  const EdgeList list = generate_erdos_renyi(n, p, 1234);
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  const double mean = pairs * p;
  const double sigma = std::sqrt(pairs * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(list.edges.size()) - mean) < 5 * sigma);
}

TEST_CASE("erdos-renyi is deterministic per seed") {
  CHECK(generate_erdos_renyi(512, 0.01, 5) == generate_erdos_renyi(512, 0.01, 5));
}

TEST_CASE("synthesized weights are distinct and positive") {
  EdgeList list = generate_erdos_renyi(256, 0.05, 9);
  synthesize_distinct_weights(list, 17);
  REQUIRE(list.weighted);
  std::set<double> ws;
  for (const Edge& e : list.edges) {
    CHECK(e.weight > 0.0);
    ws.insert(e.weight);
  }
  CHECK(ws.size() == list.edges.size());
}

TEST_CASE("snap loader parses plain and commented files") {
  const std::string path = temp_path("aam_snap_basic.txt");
  {
    std::ofstream f(path);
    f << "0 1\n1 2\n";
  }
  const EdgeList a = load_snap_edge_list(path);
  CHECK(a.edges.size() == 2);
  CHECK(a.n == 3);

  {
    std::ofstream f(path);
    f << "# comment\n0 1\n";
  }
  const EdgeList b = load_snap_edge_list(path);
  CHECK(b.edges.size() == 1);
  std::remove(path.c_str());
}

TEST_CASE("snap loader reports parse errors with line numbers") {
  const std::string path = temp_path("aam_snap_bad.txt");
  {
    std::ofstream f(path);
    f << "0 1\nx y\n";
  }
  try {
    load_snap_edge_list(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::remove(path.c_str());
  CHECK_THROWS(load_snap_edge_list("/nonexistent/graph.txt"));
}

TEST_CASE("snap round trip reproduces a generated edge list") {
  EdgeList er = generate_erdos_renyi(200, 0.02, 3);
  const std::string path = temp_path("aam_snap_roundtrip.txt");
  save_snap_edge_list(er, path);
  const EdgeList back = load_snap_edge_list(path);
  // n may shrink if the top vertex is isolated; compare edges and ids.
  REQUIRE(back.edges.size() == er.edges.size());
  for (size_t i = 0; i < er.edges.size(); ++i) {
    CHECK(back.edges[i].src == er.edges[i].src);
    CHECK(back.edges[i].dst == er.edges[i].dst);
  }
  std::remove(path.c_str());
}

TEST_CASE("snap loader remaps sparse ids on request") {
  const std::string path = temp_path("aam_snap_sparse.txt");
  {
    std::ofstream f(path);
    f << "100 900\n900 4000\n";
  }
  std::vector<std::uint64_t> ids;
  const EdgeList list = load_snap_edge_list(path, true, &ids);
  CHECK(list.n == 3);
  CHECK(ids == std::vector<std::uint64_t>{100, 900, 4000});
  CHECK(list.edges[0].src == 0);
  CHECK(list.edges[1].dst == 2);
  std::remove(path.c_str());
}

TEST_CASE("partition_1d block examples") {
  const Partition p1 = partition_1d(10, 2);
  for (VertexId v = 0; v < 5; ++v) CHECK(p1.owner(v) == 0);
  for (VertexId v = 5; v < 10; ++v) CHECK(p1.owner(v) == 1);

  const Partition p2 = partition_1d(5, 5);
  for (VertexId v = 0; v < 5; ++v) CHECK(p2.owner(v) == v);

  const Partition p3 = partition_1d(7, 3);
  CHECK(p3.block_size(0) == 3);
  CHECK(p3.block_size(1) == 2);
  CHECK(p3.block_size(2) == 2);
}

TEST_CASE("partition covers every vertex exactly once") {
  for (VertexId n : {1u, 7u, 64u, 1000u}) {
    for (ProcId N : {1u, 2u, 3u, 5u, 64u}) {
      const Partition p = partition_1d(n, N);
      std::vector<std::uint64_t> counts(N, 0);
      for (VertexId v = 0; v < n; ++v) counts[p.owner(v)]++;
      std::uint64_t sum = 0;
      for (ProcId q = 0; q < N; ++q) {
        CHECK(counts[q] == p.block_size(q));
        CHECK(p.first_vertex(q) + p.block_size(q) ==
              (q + 1 < N ? p.first_vertex(q + 1) : n));
        sum += counts[q];
      }
      CHECK(sum == n);
    }
  }
}

TEST_CASE("partition allows more processes than vertices") {
  const Partition p = partition_1d(2, 5);
  CHECK(p.owner(0) == 0);
  CHECK(p.owner(1) == 1);
  CHECK(p.block_size(4) == 0);
  CHECK_THROWS_AS(p.owner(2), ContractError);
}

TEST_CASE("graph spec strings parse") {
  const EdgeList k = parse_graph_spec("kron:5,4", 1);
  CHECK(k.n == 32);
  CHECK(k.edges.size() == 128);
  const EdgeList e = parse_graph_spec("er:64,0.5", 1);
  CHECK(e.n == 64);
  CHECK_THROWS_AS(parse_graph_spec("mesh:4", 1), ConfigError);
  CHECK_THROWS_AS(parse_graph_spec("kron:banana,4", 1), ConfigError);
  CHECK_THROWS_AS(parse_graph_spec("kron5", 1), ConfigError);
}
