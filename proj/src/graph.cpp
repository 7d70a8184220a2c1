#include "aam/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace aam {

Partition::Partition(VertexId n, ProcId num_procs) : n_(n), procs_(num_procs) {
  if (num_procs < 1) throw ContractError("partition_1d: N must be >= 1");
  base_ = n / num_procs;
  rem_ = n % num_procs;
  threshold_ = rem_ * (base_ + 1);
}

VertexId Partition::first_vertex(ProcId p) const {
  if (p < rem_) return p * (base_ + 1);
  return threshold_ + (p - rem_) * base_;
}

VertexId Partition::block_size(ProcId p) const {
  return p < rem_ ? base_ + 1 : base_;
}

Partition partition_1d(VertexId n, ProcId num_procs) {
  return Partition(n, num_procs);
}

Graph build_csr(const EdgeList& list, bool directed) {
  for (const Edge& e : list.edges) {
    if (e.src >= list.n || e.dst >= list.n)
      throw ParseError("build_csr: vertex id out of range");
  }

  // Expand to directed arcs, dropping self-loops and mirroring if undirected.
  std::vector<Edge> arcs;
  arcs.reserve(list.edges.size() * (directed ? 1 : 2));
  for (const Edge& e : list.edges) {
    if (e.src == e.dst) continue;
    arcs.push_back(e);
    if (!directed) arcs.push_back({e.dst, e.src, e.weight});
  }

  std::sort(arcs.begin(), arcs.end(), [](const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.weight < b.weight;
  });
  // Duplicates keep the smallest weight (first after the sort above).
  arcs.erase(std::unique(arcs.begin(), arcs.end(),
                         [](const Edge& a, const Edge& b) {
                           return a.src == b.src && a.dst == b.dst;
                         }),
             arcs.end());

  Graph g;
  g.n = list.n;
  g.directed = directed;
  g.weighted = list.weighted;
  g.row_offsets.assign(static_cast<size_t>(list.n) + 1, 0);
  g.col_indices.reserve(arcs.size());
  if (g.weighted) g.weights.reserve(arcs.size());
  for (const Edge& e : arcs) g.row_offsets[e.src + 1]++;
  std::partial_sum(g.row_offsets.begin(), g.row_offsets.end(),
                   g.row_offsets.begin());
  for (const Edge& e : arcs) {
    g.col_indices.push_back(e.dst);
    if (g.weighted) g.weights.push_back(e.weight);
  }
  return g;
}

EdgeList generate_kronecker(unsigned scale, std::uint64_t edge_factor,
                            std::uint64_t seed) {
  if (scale < 1) throw ContractError("generate_kronecker: scale must be >= 1");
  // Graph500 initiator probabilities.
  constexpr double kA = 0.57, kB = 0.19, kC = 0.19;
  const VertexId n = VertexId{1} << scale;
  const std::uint64_t m = edge_factor << scale;

  Rng rng(seed);
  EdgeList list;
  list.n = n;
  list.edges.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    VertexId src = 0, dst = 0;
    for (unsigned level = 0; level < scale; ++level) {
      const double r = rng.canonical();
      src <<= 1;
      dst <<= 1;
      if (r < kA) {
        // top-left quadrant: neither bit set
      } else if (r < kA + kB) {
        dst |= 1;
      } else if (r < kA + kB + kC) {
        src |= 1;
      } else {
        src |= 1;
        dst |= 1;
      }
    }
    list.edges.push_back({src, dst, 0.0});
  }
  return list;
}

EdgeList generate_erdos_renyi(VertexId n, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0)
    throw ContractError("generate_erdos_renyi: p out of [0,1]");
  EdgeList list;
  list.n = n;
  if (n < 2 || p == 0.0) return list;

  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  auto pair_at = [n](std::uint64_t k) -> Edge {
    // Row-major enumeration of pairs (i, j), i < j.
    VertexId i = 0;
    std::uint64_t row = n - 1;
    while (k >= row) {
      k -= row;
      --row;
      ++i;
    }
    return {i, static_cast<VertexId>(i + 1 + k), 0.0};
  };

  Rng rng(seed);
  if (p == 1.0) {
    for (std::uint64_t k = 0; k < pairs; ++k) list.edges.push_back(pair_at(k));
    return list;
  }
  // Geometric skipping: the gap to the next included pair is
  // floor(log(u) / log(1-p)).
  const double log1mp = std::log1p(-p);
  std::uint64_t k = 0;
  while (true) {
    double u = rng.canonical();
    if (u <= 0.0) u = 0x1.0p-53;
    k += static_cast<std::uint64_t>(std::log(u) / log1mp);
    if (k >= pairs) break;
    list.edges.push_back(pair_at(k));
    ++k;
  }
  return list;
}

void synthesize_distinct_weights(EdgeList& list, std::uint64_t seed) {
  Rng rng(seed);
  const size_t m = list.edges.size();
  std::vector<std::uint64_t> rank(m);
  std::iota(rank.begin(), rank.end(), 0);
  for (size_t i = m; i > 1; --i) {
    std::swap(rank[i - 1], rank[rng.below(i)]);
  }
  // rank+1 plus a sub-0.5 jitter: gaps of >= 1 keep the weights distinct.
  for (size_t i = 0; i < m; ++i) {
    list.edges[i].weight =
        static_cast<double>(rank[i] + 1) + 0.5 * rng.canonical();
  }
  list.weighted = true;
}

EdgeList load_snap_edge_list(const std::string& path, bool remap_sparse,
                             std::vector<std::uint64_t>* original_ids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);

  std::vector<std::array<std::uint64_t, 2>> raw;
  std::vector<double> weights;
  bool any_weight = false;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t s, d;
    if (!(ls >> s >> d)) {
      throw ParseError("parse error at line " + std::to_string(line_no) +
                       " of " + path);
    }
    double w;
    if (ls >> w) {
      if (!any_weight && !raw.empty())
        throw ParseError("mixed weighted/unweighted lines at line " +
                         std::to_string(line_no));
      any_weight = true;
      weights.push_back(w);
    } else if (any_weight) {
      throw ParseError("mixed weighted/unweighted lines at line " +
                       std::to_string(line_no));
    }
    std::string trailing;
    ls.clear();
    if (ls >> trailing) {
      throw ParseError("parse error at line " + std::to_string(line_no) +
                       " of " + path);
    }
    raw.push_back({s, d});
  }
  if (in.bad()) throw std::runtime_error("I/O error reading " + path);

  EdgeList list;
  list.weighted = any_weight;
  if (remap_sparse) {
    std::vector<std::uint64_t> ids;
    ids.reserve(raw.size() * 2);
    for (auto& e : raw) {
      ids.push_back(e[0]);
      ids.push_back(e[1]);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::unordered_map<std::uint64_t, VertexId> remap;
    remap.reserve(ids.size());
    for (size_t i = 0; i < ids.size(); ++i)
      remap.emplace(ids[i], static_cast<VertexId>(i));
    list.n = static_cast<VertexId>(ids.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      list.edges.push_back({remap[raw[i][0]], remap[raw[i][1]],
                            any_weight ? weights[i] : 0.0});
    }
    if (original_ids) *original_ids = std::move(ids);
  } else {
    std::uint64_t max_id = 0;
    for (auto& e : raw) max_id = std::max({max_id, e[0], e[1]});
    if (!raw.empty() && max_id >= kNoVertex)
      throw ParseError("vertex id too large; use --remap for sparse ids");
    list.n = raw.empty() ? 0 : static_cast<VertexId>(max_id + 1);
    for (size_t i = 0; i < raw.size(); ++i) {
      list.edges.push_back({static_cast<VertexId>(raw[i][0]),
                            static_cast<VertexId>(raw[i][1]),
                            any_weight ? weights[i] : 0.0});
    }
    if (original_ids) {
      original_ids->resize(list.n);
      std::iota(original_ids->begin(), original_ids->end(), 0);
    }
  }
  return list;
}

void save_snap_edge_list(const EdgeList& list, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  for (const Edge& e : list.edges) {
    out << e.src << ' ' << e.dst;
    if (list.weighted) out << ' ' << e.weight;
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error writing " + path);
}

void validate_graph(const Graph& g) {
  if (g.row_offsets.size() != static_cast<size_t>(g.n) + 1)
    throw ValidationError("row_offsets length != n+1");
  if (g.row_offsets.front() != 0) throw ValidationError("row_offsets[0] != 0");
  if (g.row_offsets.back() != g.col_indices.size())
    throw ValidationError("row_offsets[n] != |col_indices|");
  for (VertexId v = 0; v < g.n; ++v) {
    if (g.row_offsets[v + 1] < g.row_offsets[v])
      throw ValidationError("row_offsets not monotone");
  }
  if (g.weighted && g.weights.size() != g.col_indices.size())
    throw ValidationError("weights not parallel to col_indices");
  for (VertexId c : g.col_indices) {
    if (c >= g.n) throw ValidationError("neighbor id out of range");
  }
  if (!g.directed) {
    // Every stored arc must have its mirror stored.
    auto has_arc = [&g](VertexId u, VertexId v) {
      auto nb = g.neighbors(u);
      return std::binary_search(nb.begin(), nb.end(), v);
    };
    for (VertexId u = 0; u < g.n; ++u) {
      for (VertexId v : g.neighbors(u)) {
        if (!has_arc(v, u))
          throw ValidationError("undirected graph missing mirror arc");
      }
    }
  }
}

EdgeList parse_graph_spec(const std::string& spec, std::uint64_t seed) {
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ConfigError("bad graph spec (expected kind:args): " + spec);
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  auto parse_u64 = [&spec](const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError("bad number in graph spec: " + spec);
    return v;
  };
  if (kind == "file") return load_snap_edge_list(args);
  auto comma = args.find(',');
  if (comma == std::string::npos)
    throw ConfigError("bad graph spec (expected two args): " + spec);
  const std::string a = args.substr(0, comma);
  const std::string b = args.substr(comma + 1);
  if (kind == "kron") {
    return generate_kronecker(static_cast<unsigned>(parse_u64(a)),
                              parse_u64(b), seed);
  }
  if (kind == "er") {
    double p = 0.0;
    try {
      p = std::stod(b);
    } catch (const std::exception&) {
      throw ConfigError("bad probability in graph spec: " + spec);
    }
    return generate_erdos_renyi(static_cast<VertexId>(parse_u64(a)), p, seed);
  }
  throw ConfigError("unknown graph kind: " + kind);
}

}  // namespace aam
