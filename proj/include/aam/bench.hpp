#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aam/algorithms.hpp"
#include "aam/perf_model.hpp"

namespace aam {

/// Mean wall time per call, with the repeat count auto-scaled until one
/// batch takes at least a millisecond (sub-resolution costs get batched).
double measure_mean_ns(const std::function<void()>& fn);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void write(std::ostream& os) const;
};

// --- single-vertex activities -------------------------------------------------

struct SingleVertexConfig {
  std::string kind = "cas";  // cas | acc
  int ops = 10;              // operations per vertex per thread
  unsigned threads = 1;
  ExecPolicy policy;
  int reps = 100;
  std::uint64_t seed = 1;
  CostModel cost;
};

struct SingleVertexResult {
  SingleVertexConfig cfg;
  double mean_time_ns = 0.0;  // wall time per repetition
  RunStats::Snapshot stats;
};

/// T threads mark (CAS) or increment (ACC) one shared vertex `ops` times
/// each, with the chosen mechanism; checks the result before timing.
SingleVertexResult bench_single_vertex(const SingleVertexConfig& cfg);

// --- coarsening sweep ----------------------------------------------------------

struct CoarsenSweepConfig {
  EdgeList graph;
  bool directed = false;
  VertexId source = 0;
  std::vector<std::uint32_t> m_values;  // paper sweep: 1 then 16..320 by 16
  unsigned threads = 1;
  ExecPolicy policy;
  int reps = 3;
  std::uint64_t seed = 1;
  CostModel cost;
};

struct CoarsenRow {
  std::uint32_t m = 1;
  double wall_ns_median = 0.0;
  std::uint64_t model_ns = 0;      // synthetic cost, median over reps
  double model_ns_per_op = 0.0;    // model_ns / delivered operators
  RunStats::Snapshot stats;
};

/// Full BFS per M value; every run is checked against the sequential
/// oracle before its timing is recorded.
std::vector<CoarsenRow> bench_coarsen_sweep(const CoarsenSweepConfig& cfg);

// --- coalescing sweep ------------------------------------------------------------

struct CoalesceSweepConfig {
  ProcId procs = 2;
  std::vector<std::uint32_t> c_values;
  std::string kind = "cas";  // cas | acc
  std::uint32_t count = 1 << 12;  // remote elements touched
  std::uint64_t seed = 1;
  CostModel cost;  // enable to make batch amortization measurable
};

struct CoalesceRow {
  std::string mechanism;  // "atomics" | "htm"
  std::uint32_t c = 1;
  std::uint64_t model_ns = 0;
  RunStats::Snapshot stats;
};

struct CoalesceResult {
  std::vector<CoalesceRow> rows;  // atomics baseline first, then htm per C
  std::optional<std::uint32_t> crossover_c;  // first C beating the baseline
};

/// Remote-marking / remote-increment workload across N simulated
/// processes, sweeping the coalescing factor against a single-element
/// remote-atomics baseline.
CoalesceResult bench_coalesce_sweep(const CoalesceSweepConfig& cfg);

// --- distributed scenarios -------------------------------------------------------

struct DistributedConfig {
  std::string scenario = "o1";  // o1 | o2 | o3 | o4
  ProcId procs = 2;
  VertexId vertices_per_proc = 4096;
  ExecPolicy policy;
  std::uint64_t seed = 1;
  std::chrono::milliseconds watchdog{20000};
};

struct DistributedResult {
  std::string scenario;
  std::uint64_t x = 0;  // transactions per process
  int local_marks = 0;  // a
  int remote_marks = 0; // b
  ProcId procs = 0;
  double wall_ns = 0.0;
  bool replay_ok = false;  // final state equals sequential replay
  RunStats::Snapshot stats;
};

/// Ownership-protocol scenarios O-1..O-4: each of N processes runs x
/// transactions marking a local and b remote random vertices.
DistributedResult bench_distributed(const DistributedConfig& cfg);

// --- cost-model samples for the linear fit ---------------------------------------

/// Executes activities touching exactly n cells under the synthetic cost
/// model and reports the mean model time per activity, for both
/// mechanisms. Feeds fit_linear / crossing_point.
std::vector<CostSample> activity_cost_samples(
    const std::vector<std::uint32_t>& sizes, int reps, const CostModel& cost,
    const RetryPolicy& policy);

// CSV renderers used by the CLI.
Csv to_csv(const SingleVertexResult& r);
Csv to_csv(const CoarsenSweepConfig& cfg, const std::vector<CoarsenRow>& rows);
Csv to_csv(const CoalesceSweepConfig& cfg, const CoalesceResult& r);
Csv to_csv(const DistributedResult& r);
Csv to_csv(const std::vector<CostSample>& samples);

}  // namespace aam
