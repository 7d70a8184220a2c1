#pragma once

#include <utility>
#include <vector>

#include "aam/machine.hpp"
#include "aam/oracle.hpp"

namespace aam {

/// Runtime knobs shared by every algorithm run: machine shape (N, T),
/// coarsening M, coalescing C, and the execution policy.
struct AlgoConfig {
  ProcId procs = 1;
  unsigned threads = 1;
  std::uint32_t coarsen_M = 1;
  std::uint32_t coalesce_C = 1;
  CoarsenOrder order = CoarsenOrder::Fifo;
  ExecPolicy policy;
  std::uint64_t seed = 1;
  CostModel cost;
  std::chrono::milliseconds watchdog{20000};
  bool bfs_visited_check = true;

  MachineConfig machine_config() const {
    MachineConfig m;
    m.procs = procs;
    m.threads = threads;
    m.coarsen_M = coarsen_M;
    m.coalesce_C = coalesce_C;
    m.order = order;
    m.policy = policy;
    m.seed = seed;
    m.cost = cost;
    m.watchdog = watchdog;
    return m;
  }
};

inline constexpr std::uint64_t kUnvisited = ~std::uint64_t{0};
inline constexpr std::uint32_t kUncolored = ~std::uint32_t{0};

/// Level-synchronous BFS over FF&MF messages; the operator is the
/// distance-improvement guard.
std::vector<std::uint64_t> bfs(const Graph& g, VertexId source,
                               const AlgoConfig& cfg,
                               RunStats::Snapshot* stats_out = nullptr);

/// Iterative vertex-centric PageRank over FF&AS messages with stale-rank
/// double buffering.
std::vector<double> pagerank(const Graph& g, double damping, int iterations,
                             const AlgoConfig& cfg,
                             RunStats::Snapshot* stats_out = nullptr);

struct MstOutput {
  std::vector<std::pair<VertexId, VertexId>> edges;  // canonical (min,max)
  double total_weight = 0.0;
};

/// Boruvka minimum spanning forest over FR&MF messages: transactional
/// supervertex merges with redundant merges failing at the algorithm
/// level. Requires distinct positive weights.
MstOutput boruvka_mst(const Graph& g, const AlgoConfig& cfg,
                      RunStats::Snapshot* stats_out = nullptr);

/// Two-color concurrent traversal over FR&AS messages; the failure handler
/// terminates the run when the traversals meet.
bool st_connected(const Graph& g, VertexId s, VertexId t,
                  const AlgoConfig& cfg,
                  RunStats::Snapshot* stats_out = nullptr);

/// Boman-style conflict-repair coloring over FR&MF messages: greedy local
/// colors, transactional validation, coin-flip victim recoloring.
std::vector<std::uint32_t> boman_coloring(const Graph& g,
                                          const AlgoConfig& cfg,
                                          RunStats::Snapshot* stats_out = nullptr);

}  // namespace aam
