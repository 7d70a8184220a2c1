#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aam/common.hpp"

namespace aam {

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Raw edge tuples as produced by a generator or loaded from a file.
/// Weights are all present or all absent.
struct EdgeList {
  VertexId n = 0;
  bool weighted = false;
  std::vector<Edge> edges;

  bool operator==(const EdgeList&) const = default;
};

/// Immutable CSR topology with optional per-edge weights. For undirected
/// graphs every stored edge has its mirror stored as well.
struct Graph {
  VertexId n = 0;
  bool directed = false;
  bool weighted = false;
  std::vector<std::uint64_t> row_offsets;  // length n+1
  std::vector<VertexId> col_indices;
  std::vector<double> weights;  // parallel to col_indices when weighted

  std::uint64_t degree(VertexId v) const {
    return row_offsets[v + 1] - row_offsets[v];
  }
  std::uint64_t num_stored_edges() const { return col_indices.size(); }

  struct NeighborRange {
    const VertexId* first;
    const VertexId* last;
    const VertexId* begin() const { return first; }
    const VertexId* end() const { return last; }
  };
  NeighborRange neighbors(VertexId v) const {
    return {col_indices.data() + row_offsets[v],
            col_indices.data() + row_offsets[v + 1]};
  }
};

/// Contiguous 1-D block partitioning of [0, n) over N processes.
/// Block sizes differ by at most one; N may exceed n.
class Partition {
 public:
  Partition() = default;
  Partition(VertexId n, ProcId num_procs);

  ProcId owner(VertexId v) const {
    if (v >= n_) throw ContractError("owner: vertex id out of range");
    if (v < threshold_) return static_cast<ProcId>(v / (base_ + 1));
    return static_cast<ProcId>(rem_ + (v - threshold_) / base_);
  }

  VertexId first_vertex(ProcId p) const;
  VertexId block_size(ProcId p) const;
  VertexId n() const { return n_; }
  ProcId num_procs() const { return procs_; }

 private:
  VertexId n_ = 0;
  ProcId procs_ = 1;
  VertexId base_ = 0;       // floor(n / N)
  VertexId rem_ = 0;        // n % N; first rem_ blocks hold base_+1
  VertexId threshold_ = 0;  // rem_ * (base_ + 1)
};

// Graph construction and generation -----------------------------------------

/// Builds a CSR graph from edge tuples. Self-loops and duplicate edges are
/// dropped (duplicates keep the smallest weight); undirected inputs are
/// mirrored. Throws ParseError on out-of-range vertex ids.
Graph build_csr(const EdgeList& edges, bool directed);

/// Stochastic-Kronecker (R-MAT) edge list with the Graph500 initiator
/// (A,B,C,D) = (0.57, 0.19, 0.19, 0.05). n = 2^scale, |edges| =
/// edge_factor * 2^scale. Deterministic per seed.
EdgeList generate_kronecker(unsigned scale, std::uint64_t edge_factor,
                            std::uint64_t seed);

/// G(n, p): each unordered pair independently with probability p.
EdgeList generate_erdos_renyi(VertexId n, double p, std::uint64_t seed);

/// Assigns distinct positive pseudo-random weights to every edge.
/// Distinctness makes the MST unique.
void synthesize_distinct_weights(EdgeList& list, std::uint64_t seed);

/// Parses whitespace-separated "src dst [weight]" lines; '#' starts a
/// comment line. n = max id + 1. With remap_sparse the ids are compacted
/// and the original ids are returned through original_ids.
EdgeList load_snap_edge_list(const std::string& path, bool remap_sparse = false,
                             std::vector<std::uint64_t>* original_ids = nullptr);

/// Writes an edge list in the same format load_snap_edge_list reads.
void save_snap_edge_list(const EdgeList& list, const std::string& path);

Partition partition_1d(VertexId n, ProcId num_procs);

/// Checks every Graph invariant; throws ValidationError describing the
/// first violation. Used by tests and by benchmarks before timing.
void validate_graph(const Graph& g);

/// Parses a CLI graph spec: kron:<scale>,<edge_factor> | er:<n>,<p> |
/// file:<path>.
EdgeList parse_graph_spec(const std::string& spec, std::uint64_t seed);

}  // namespace aam
