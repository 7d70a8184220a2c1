#include "aam/oracle.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace aam::oracle {

std::vector<std::uint64_t> bfs_distances(const Graph& g, VertexId source) {
  std::vector<std::uint64_t> dist(g.n, kUnreachable);
  if (source >= g.n) throw ContractError("bfs oracle: source out of range");
  std::deque<VertexId> q;
  dist[source] = 0;
  q.push_back(source);
  while (!q.empty()) {
    const VertexId u = q.front();
    q.pop_front();
    for (VertexId w : g.neighbors(u)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[u] + 1;
        q.push_back(w);
      }
    }
  }
  return dist;
}

std::vector<double> pagerank(const Graph& g, double damping, int iterations) {
  const double n = static_cast<double>(g.n);
  std::vector<double> rank(g.n, g.n ? 1.0 / n : 0.0);
  std::vector<double> old_rank(g.n);
  for (int it = 0; it < iterations; ++it) {
    old_rank = rank;
    std::fill(rank.begin(), rank.end(), 0.0);
    for (VertexId v = 0; v < g.n; ++v) {
      rank[v] += (1.0 - damping) / n;
      const std::uint64_t deg = g.degree(v);
      if (deg == 0) continue;  // dangling: no scatter term
      const double share = damping * old_rank[v] / static_cast<double>(deg);
      for (VertexId w : g.neighbors(v)) rank[w] += share;
    }
  }
  return rank;
}

namespace {
struct Dsu {
  std::vector<VertexId> parent;
  explicit Dsu(VertexId n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  VertexId find(VertexId v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  bool unite(VertexId a, VertexId b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};
}  // namespace

MstResult kruskal_msf(const Graph& g) {
  if (!g.weighted) throw ContractError("kruskal oracle: weights required");
  struct E {
    VertexId u, v;
    double w;
  };
  std::vector<E> edges;
  for (VertexId u = 0; u < g.n; ++u) {
    for (std::uint64_t i = g.row_offsets[u]; i < g.row_offsets[u + 1]; ++i) {
      const VertexId v = g.col_indices[i];
      if (u < v) edges.push_back({u, v, g.weights[i]});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const E& a, const E& b) { return a.w < b.w; });
  Dsu dsu(g.n);
  MstResult res;
  for (const E& e : edges) {
    if (dsu.unite(e.u, e.v)) {
      res.edges.emplace_back(e.u, e.v);
      res.total_weight += e.w;
    }
  }
  std::sort(res.edges.begin(), res.edges.end());
  return res;
}

bool connected(const Graph& g, VertexId s, VertexId t) {
  if (s == t) return true;
  Dsu dsu(g.n);
  for (VertexId u = 0; u < g.n; ++u) {
    for (VertexId v : g.neighbors(u)) dsu.unite(u, v);
  }
  return dsu.find(s) == dsu.find(t);
}

bool coloring_valid(const Graph& g, const std::vector<std::uint32_t>& colors) {
  if (colors.size() != g.n) return false;
  constexpr std::uint32_t kUncolored = ~std::uint32_t{0};
  for (VertexId u = 0; u < g.n; ++u) {
    if (colors[u] == kUncolored) return false;
    for (VertexId v : g.neighbors(u)) {
      if (u != v && colors[u] == colors[v]) return false;
    }
  }
  return true;
}

std::uint64_t max_degree(const Graph& g) {
  std::uint64_t best = 0;
  for (VertexId v = 0; v < g.n; ++v) best = std::max(best, g.degree(v));
  return best;
}

}  // namespace aam::oracle
