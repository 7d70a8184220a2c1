#include "aam/algorithms.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>

namespace aam {

namespace {

// Next-frontier entry collected at the executing process.
struct FrontierSink {
  std::mutex mu;
  std::vector<std::pair<VertexId, Word>> items;
  void push(VertexId v, Word w) {
    std::lock_guard<std::mutex> g(mu);
    items.emplace_back(v, w);
  }
};

}  // namespace

// --- BFS ----------------------------------------------------------------------

std::vector<std::uint64_t> bfs(const Graph& g, VertexId source,
                               const AlgoConfig& cfg,
                               RunStats::Snapshot* stats_out) {
  if (source >= g.n) throw ContractError("bfs: source out of range");
  Machine m(g.n, cfg.machine_config());
  CellArray dist(g.n);
  for (VertexId v = 0; v < g.n; ++v)
    dist[v].value.store(kUnvisited, std::memory_order_relaxed);
  m.register_cells(dist);

  std::vector<FrontierSink> next(cfg.procs);

  OperatorDef visit;
  visit.cls = kFFMF;
  visit.body = [&dist](Txn& t, VertexId v, Word nd) -> OperatorResult {
    const Word cur = t.read(dist[v]);
    if (cur > nd) {
      t.write(dist[v], nd);
      return {false, nd};
    }
    return {true, 0};  // distance not improved: algorithm-level failure
  };
  visit.atomic_body = [&dist](Machine& mm, ProcId, VertexId v,
                              Word nd) -> OperatorResult {
    for (;;) {
      const Word cur = dist[v].peek();
      if (cur <= nd) return {true, 0};
      if (mm.engine().atomic_cas(dist[v], cur, nd, &mm.stats()))
        return {false, nd};
    }
  };
  if (cfg.bfs_visited_check) {
    visit.skip_check = [&dist](VertexId v, Word nd) {
      return dist[v].peek() <= nd;
    };
  }
  visit.result_sink = [&next](ProcId p, VertexId v, Word,
                              const OperatorResult& r) {
    if (!r.failed) next[p].push(v, 0);
  };
  const OperatorId vid = m.register_operator(std::move(visit));

  const ProcId sp = m.partition().owner(source);
  m.spawn(sp, {kFFMF, sp, vid, source, 0, kNoProc});
  m.run_to_quiescence();

  for (;;) {
    bool any = false;
    std::vector<std::vector<std::pair<VertexId, Word>>> frontier(cfg.procs);
    for (ProcId p = 0; p < cfg.procs; ++p) {
      std::lock_guard<std::mutex> lk(next[p].mu);
      frontier[p].swap(next[p].items);
      any = any || !frontier[p].empty();
    }
    if (!any) break;
    for (ProcId p = 0; p < cfg.procs; ++p) {
      for (auto& [u, unused] : frontier[p]) {
        const Word du = dist[u].peek();
        for (VertexId w : g.neighbors(u)) {
          m.spawn(p, {kFFMF, m.partition().owner(w), vid, w, du + 1, kNoProc});
        }
      }
    }
    m.run_to_quiescence();
  }

  std::vector<std::uint64_t> out(g.n);
  for (VertexId v = 0; v < g.n; ++v) out[v] = dist[v].peek();
  if (stats_out) *stats_out = m.stats().snapshot();
  return out;
}

// --- PageRank -------------------------------------------------------------------

std::vector<double> pagerank(const Graph& g, double damping, int iterations,
                             const AlgoConfig& cfg,
                             RunStats::Snapshot* stats_out) {
  if (!(damping > 0.0 && damping < 1.0))
    throw ContractError("pagerank: damping must be in (0,1)");
  if (g.n == 0) return {};
  Machine m(g.n, cfg.machine_config());
  CellArray rank(g.n);
  const double inv_n = 1.0 / static_cast<double>(g.n);
  for (VertexId v = 0; v < g.n; ++v)
    rank[v].value.store(f64_to_word(inv_n), std::memory_order_relaxed);
  m.register_cells(rank);

  std::vector<double> old_rank(g.n);  // stable snapshot during each phase

  // Vertex-centric operator: self term plus scatter to every neighbor.
  OperatorDef vertex_op;
  vertex_op.cls = kFFAS;
  vertex_op.body = [&](Txn& t, VertexId v, Word) -> OperatorResult {
    t.add_f64(rank[v], (1.0 - damping) * inv_n);
    const std::uint64_t deg = g.degree(v);
    if (deg > 0) {
      const double share = damping * old_rank[v] / static_cast<double>(deg);
      for (VertexId w : g.neighbors(v)) t.add_f64(rank[w], share);
    }
    return {false, 0};
  };
  const OperatorId vertex_id = m.register_operator(std::move(vertex_op));

  // Single-target increment used by the atomics lowering.
  OperatorDef add_op;
  add_op.cls = kFFAS;
  add_op.body = [&rank](Txn& t, VertexId v, Word share) -> OperatorResult {
    t.add_f64(rank[v], word_to_f64(share));
    return {false, 0};
  };
  add_op.atomic_body = [&rank](Machine& mm, ProcId, VertexId v,
                               Word share) -> OperatorResult {
    mm.engine().atomic_acc(rank[v], share, AccOp::F64Sum, &mm.stats());
    return {false, 0};
  };
  const OperatorId add_id = m.register_operator(std::move(add_op));

  const bool atomics = cfg.policy.mech == ExecPolicy::Mech::Atomics;
  for (int it = 0; it < iterations; ++it) {
    for (VertexId v = 0; v < g.n; ++v) old_rank[v] = word_to_f64(rank[v].peek());
    for (VertexId v = 0; v < g.n; ++v) rank[v].unsafe_store(f64_to_word(0.0));
    for (VertexId v = 0; v < g.n; ++v) {
      const ProcId p = m.partition().owner(v);
      if (!atomics) {
        m.spawn(p, {kFFAS, p, vertex_id, v, 0, kNoProc});
        continue;
      }
      // Atomics baseline: one single-word accumulate per contribution.
      m.spawn(p, {kFFAS, p, add_id, v, f64_to_word((1.0 - damping) * inv_n),
                  kNoProc});
      const std::uint64_t deg = g.degree(v);
      if (deg == 0) continue;
      const Word share =
          f64_to_word(damping * old_rank[v] / static_cast<double>(deg));
      for (VertexId w : g.neighbors(v)) {
        m.spawn(p, {kFFAS, m.partition().owner(w), add_id, w, share, kNoProc});
      }
    }
    m.run_to_quiescence();
  }

  std::vector<double> out(g.n);
  for (VertexId v = 0; v < g.n; ++v) out[v] = word_to_f64(rank[v].peek());
  if (stats_out) *stats_out = m.stats().snapshot();
  return out;
}

// --- Boruvka MST ---------------------------------------------------------------

namespace {

struct BoruvkaEdge {
  VertexId u, v;
  double w;
};

VertexId find_root_txn(Txn& t, CellArray& parent, VertexId x) {
  for (;;) {
    const VertexId p = static_cast<VertexId>(t.read(parent[x]));
    if (p == x) return x;
    x = p;
  }
}

VertexId find_root_peek(CellArray& parent, VertexId x) {
  for (;;) {
    const VertexId p = static_cast<VertexId>(parent[x].peek());
    if (p == x) return x;
    x = p;
  }
}

}  // namespace

MstOutput boruvka_mst(const Graph& g, const AlgoConfig& cfg,
                      RunStats::Snapshot* stats_out) {
  if (!g.weighted) throw ContractError("boruvka_mst: weights required");
  Machine m(g.n, cfg.machine_config());
  CellArray parent(g.n);
  for (VertexId v = 0; v < g.n; ++v)
    parent[v].value.store(v, std::memory_order_relaxed);
  m.register_cells(parent);

  // Unique undirected edges plus per-supervertex incident multisets.
  std::vector<BoruvkaEdge> edges;
  for (VertexId u = 0; u < g.n; ++u) {
    for (std::uint64_t i = g.row_offsets[u]; i < g.row_offsets[u + 1]; ++i) {
      const VertexId v = g.col_indices[i];
      if (u < v) edges.push_back({u, v, g.weights[i]});
    }
  }
  std::vector<std::vector<std::uint32_t>> comp_edges(g.n);
  for (std::uint32_t e = 0; e < edges.size(); ++e) {
    comp_edges[edges[e].u].push_back(e);
    comp_edges[edges[e].v].push_back(e);
  }

  struct MstSink {
    std::mutex mu;
    std::vector<std::uint32_t> edge_ids;
  };
  std::vector<MstSink> sinks(cfg.procs);

  OperatorDef merge;
  merge.cls = kFRMF;
  merge.body = [&](Txn& t, VertexId, Word eid) -> OperatorResult {
    const BoruvkaEdge& e = edges[eid];
    const VertexId ru = find_root_txn(t, parent, e.u);
    const VertexId rv = find_root_txn(t, parent, e.v);
    if (ru == rv) return {true, eid};  // supervertices already merged
    const VertexId lo = std::min(ru, rv), hi = std::max(ru, rv);
    t.write(parent[hi], lo);
    return {false, eid};
  };
  merge.result_sink = [&sinks](ProcId p, VertexId, Word eid,
                               const OperatorResult& r) {
    if (!r.failed) {
      std::lock_guard<std::mutex> g(sinks[p].mu);
      sinks[p].edge_ids.push_back(static_cast<std::uint32_t>(eid));
    }
  };
  // A failed merge means the components were already connected; there is
  // nothing left to retry.
  merge.failure_handler = [](Machine&, ProcId, const AtomicMessage&,
                             const OperatorResult&) {};
  const OperatorId merge_id = m.register_operator(std::move(merge));

  std::vector<VertexId> roots;
  for (VertexId v = 0; v < g.n; ++v) roots.push_back(v);

  while (true) {
    // Select each live supervertex's minimum incident edge, purging edges
    // that became internal after earlier contractions.
    std::vector<std::pair<VertexId, std::uint32_t>> selected;
    for (VertexId r : roots) {
      auto& list = comp_edges[r];
      std::erase_if(list, [&](std::uint32_t e) {
        return find_root_peek(parent, edges[e].u) ==
               find_root_peek(parent, edges[e].v);
      });
      if (list.empty()) continue;
      std::uint32_t best = list[0];
      for (std::uint32_t e : list) {
        if (edges[e].w < edges[best].w) best = e;
      }
      selected.emplace_back(r, best);
    }
    if (selected.empty()) break;

    for (auto& [r, e] : selected) {
      const ProcId p = m.partition().owner(r);
      m.spawn(p, {kFRMF, p, merge_id, r, e, p});
    }
    m.run_to_quiescence();

    // Contraction bookkeeping: hand merged supervertices' edge lists to
    // their new roots.
    std::vector<VertexId> new_roots;
    for (VertexId r : roots) {
      const VertexId nr = find_root_peek(parent, r);
      if (nr != r) {
        auto& src = comp_edges[r];
        auto& dst = comp_edges[nr];
        dst.insert(dst.end(), src.begin(), src.end());
        src.clear();
        src.shrink_to_fit();
      }
    }
    for (VertexId r : roots) {
      if (find_root_peek(parent, r) == r && !comp_edges[r].empty())
        new_roots.push_back(r);
    }
    std::sort(new_roots.begin(), new_roots.end());
    new_roots.erase(std::unique(new_roots.begin(), new_roots.end()),
                    new_roots.end());
    roots.swap(new_roots);
  }

  std::vector<std::uint32_t> picked;
  for (auto& s : sinks)
    picked.insert(picked.end(), s.edge_ids.begin(), s.edge_ids.end());
  std::sort(picked.begin(), picked.end());

  MstOutput out;
  for (std::uint32_t e : picked) {
    out.edges.emplace_back(std::min(edges[e].u, edges[e].v),
                           std::max(edges[e].u, edges[e].v));
    out.total_weight += edges[e].w;
  }
  std::sort(out.edges.begin(), out.edges.end());
  if (stats_out) *stats_out = m.stats().snapshot();
  return out;
}

// --- ST connectivity -------------------------------------------------------------

bool st_connected(const Graph& g, VertexId s, VertexId t,
                  const AlgoConfig& cfg, RunStats::Snapshot* stats_out) {
  if (s >= g.n || t >= g.n) throw ContractError("st: vertex out of range");
  if (s == t) return true;
  constexpr Word kWhite = 0, kClaimed = 1, kSame = 2, kOther = 3;

  Machine m(g.n, cfg.machine_config());
  CellArray color(g.n);  // 0 = white, else the claiming traversal's color
  m.register_cells(color);
  std::vector<FrontierSink> next(cfg.procs);
  std::atomic<bool> verdict{false};

  OperatorDef visit;
  visit.cls = kFRAS;
  visit.body = [&color](Txn& t, VertexId v, Word col) -> OperatorResult {
    const Word cur = t.read(color[v]);
    if (cur == kWhite) {
      t.write(color[v], col);
      return {false, kClaimed};
    }
    return {false, cur == col ? kSame : kOther};
  };
  visit.atomic_body = [&color](Machine& mm, ProcId, VertexId v,
                               Word col) -> OperatorResult {
    if (mm.engine().atomic_cas(color[v], kWhite, col, &mm.stats()))
      return {false, kClaimed};
    const Word cur = color[v].peek();
    return {false, cur == col ? kSame : kOther};
  };
  visit.result_sink = [&next](ProcId p, VertexId v, Word col,
                              const OperatorResult& r) {
    if (r.value == kClaimed) next[p].push(v, col);
  };
  visit.failure_handler = [&verdict](Machine& mm, ProcId,
                                     const AtomicMessage&,
                                     const OperatorResult& r) {
    if (r.value == kOther) {
      // The two traversals met: s and t are connected.
      verdict.store(true, std::memory_order_release);
      mm.cancel();
    }
  };
  const OperatorId vid = m.register_operator(std::move(visit));

  constexpr Word kGrey = 1, kGreen = 2;
  const ProcId sp = m.partition().owner(s), tp = m.partition().owner(t);
  m.spawn(sp, {kFRAS, sp, vid, s, kGrey, sp});
  m.spawn(tp, {kFRAS, tp, vid, t, kGreen, tp});
  m.run_to_quiescence();

  while (!verdict.load(std::memory_order_acquire)) {
    bool any = false;
    std::vector<std::vector<std::pair<VertexId, Word>>> frontier(cfg.procs);
    for (ProcId p = 0; p < cfg.procs; ++p) {
      std::lock_guard<std::mutex> lk(next[p].mu);
      frontier[p].swap(next[p].items);
      any = any || !frontier[p].empty();
    }
    if (!any) break;
    for (ProcId p = 0; p < cfg.procs && !verdict.load(); ++p) {
      for (auto& [u, col] : frontier[p]) {
        for (VertexId w : g.neighbors(u)) {
          m.spawn(p, {kFRAS, m.partition().owner(w), vid, w, col, p});
        }
      }
    }
    m.run_to_quiescence();
  }

  if (stats_out) *stats_out = m.stats().snapshot();
  return verdict.load(std::memory_order_acquire);
}

// --- Boman coloring -------------------------------------------------------------

namespace {

std::uint32_t smallest_unused(std::vector<std::uint32_t>& used) {
  std::sort(used.begin(), used.end());
  std::uint32_t c = 0;
  for (std::uint32_t u : used) {
    if (u == c) ++c;
    else if (u > c) break;
  }
  return c;
}

}  // namespace

std::vector<std::uint32_t> boman_coloring(const Graph& g,
                                          const AlgoConfig& cfg,
                                          RunStats::Snapshot* stats_out) {
  Machine m(g.n, cfg.machine_config());
  CellArray color(g.n);
  for (VertexId v = 0; v < g.n; ++v)
    color[v].value.store(kUncolored, std::memory_order_relaxed);
  m.register_cells(color);

  // Initial greedy pass: each process colors its own block against its own
  // earlier choices only, so cross-boundary conflicts are possible and get
  // repaired below.
  {
    std::vector<std::uint32_t> used;
    for (VertexId v = 0; v < g.n; ++v) {
      const ProcId p = m.partition().owner(v);
      used.clear();
      for (VertexId w : g.neighbors(v)) {
        if (m.partition().owner(w) != p) continue;
        const auto cw = static_cast<std::uint32_t>(color[w].peek());
        if (cw != kUncolored) used.push_back(cw);
      }
      color[v].unsafe_store(smallest_unused(used));
    }
  }

  std::atomic<std::uint64_t> conflicts{0};
  OperatorId validate_id = 0, recolor_id = 0;

  OperatorDef recolor;
  recolor.cls = kFRMF;
  recolor.body = [&](Txn& t, VertexId v, Word) -> OperatorResult {
    std::vector<std::uint32_t> used;
    used.reserve(g.degree(v));
    for (VertexId w : g.neighbors(v)) {
      used.push_back(static_cast<std::uint32_t>(t.read(color[w])));
    }
    const std::uint32_t c = smallest_unused(used);
    t.write(color[v], c);
    return {false, c};
  };
  recolor.failure_handler = [](Machine&, ProcId, const AtomicMessage&,
                               const OperatorResult&) {};

  OperatorDef validate;
  validate.cls = kFRMF;
  validate.body = [&](Txn& t, VertexId v, Word) -> OperatorResult {
    const Word cur = t.read(color[v]);
    for (VertexId w : g.neighbors(v)) {
      if (w == v) continue;
      if (t.read(color[w]) == cur) {
        // Conflict: a fair coin picks which endpoint is recolored.
        const VertexId victim = m.thread_rng().coin() ? w : v;
        return {true, victim};
      }
    }
    return {false, kNoVertex};
  };
  validate.failure_handler = [&](Machine& mm, ProcId spawner,
                                 const AtomicMessage&,
                                 const OperatorResult& r) {
    if (!r.failed) return;  // kNoVertex: nothing to recolor
    conflicts.fetch_add(1, std::memory_order_relaxed);
    const auto victim = static_cast<VertexId>(r.value);
    mm.spawn(spawner, {kFRMF, mm.partition().owner(victim), recolor_id,
                       victim, 0, spawner});
  };

  validate_id = m.register_operator(std::move(validate));
  recolor_id = m.register_operator(std::move(recolor));

  constexpr int kMaxRounds = 64;
  for (int round = 0;; ++round) {
    if (round >= kMaxRounds)
      throw WatchdogError("coloring failed to converge");
    conflicts.store(0, std::memory_order_relaxed);
    for (VertexId v = 0; v < g.n; ++v) {
      const ProcId p = m.partition().owner(v);
      m.spawn(p, {kFRMF, p, validate_id, v, 0, p});
    }
    m.run_to_quiescence();
    if (conflicts.load(std::memory_order_relaxed) == 0) break;
  }

  std::vector<std::uint32_t> out(g.n);
  for (VertexId v = 0; v < g.n; ++v)
    out[v] = static_cast<std::uint32_t>(color[v].peek());
  if (stats_out) *stats_out = m.stats().snapshot();
  return out;
}

}  // namespace aam
