#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aam/graph.hpp"

namespace aam {
// Sequential reference implementations, independent of the transactional
// runtime. Benchmarks validate against these before recording any timing;
// tests freeze expected values from them.
namespace oracle {

inline constexpr std::uint64_t kUnreachable = ~std::uint64_t{0};

/// Plain queue BFS. Unreachable vertices get kUnreachable.
std::vector<std::uint64_t> bfs_distances(const Graph& g, VertexId source);

/// Iterative PageRank with explicit stale-rank double buffering. Vertices
/// with out-degree zero contribute nothing to their neighbors.
std::vector<double> pagerank(const Graph& g, double damping, int iterations);

struct MstResult {
  std::vector<std::pair<VertexId, VertexId>> edges;  // canonical (min,max)
  double total_weight = 0.0;
};

/// Kruskal over distinct weights: the unique minimum spanning forest.
MstResult kruskal_msf(const Graph& g);

/// Union-find connectivity.
bool connected(const Graph& g, VertexId s, VertexId t);

/// True when no edge is monochromatic and every vertex is colored.
bool coloring_valid(const Graph& g, const std::vector<std::uint32_t>& colors);

std::uint64_t max_degree(const Graph& g);

}  // namespace oracle
}  // namespace aam
