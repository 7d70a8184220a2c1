#include "aam/bench.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace aam {

namespace {

using Clock = std::chrono::steady_clock;

std::string u64s(std::uint64_t v) { return std::to_string(v); }
std::string f64s(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* build_id() {
#ifdef AAM_BUILD_ID
  return AAM_BUILD_ID;
#else
  return "unknown";
#endif
}

void append_stat_header(std::vector<std::string>& h) {
  for (const char* c :
       {"commits", "aborts_conflict", "aborts_capacity", "aborts_other",
        "serializations", "operator_failures", "operators_executed",
        "operators_skipped", "ownership_backoffs", "messages_sent",
        "batches_sent", "model_ns", "seed", "build"}) {
    h.push_back(c);
  }
}

void append_stat_row(std::vector<std::string>& r, const RunStats::Snapshot& s,
                     std::uint64_t seed) {
  for (std::uint64_t v :
       {s.commits, s.aborts_conflict, s.aborts_capacity, s.aborts_other,
        s.serializations, s.operator_failures, s.operators_executed,
        s.operators_skipped, s.ownership_backoffs, s.messages_sent,
        s.batches_sent, s.model_ns}) {
    r.push_back(u64s(v));
  }
  r.push_back(u64s(seed));
  r.push_back(build_id());
}

void check_accounting(const RunStats::Snapshot& s) {
  // The identity holds by construction; a violation means lost counts.
  const std::uint64_t sum =
      s.aborts_conflict + s.aborts_capacity + s.aborts_other;
  if (sum != s.total_aborts())
    throw ValidationError("abort accounting identity violated");
}

}  // namespace

void Csv::write(std::ostream& os) const {
  for (size_t i = 0; i < header.size(); ++i) {
    os << header[i] << (i + 1 == header.size() ? '\n' : ',');
  }
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      os << row[i] << (i + 1 == row.size() ? '\n' : ',');
    }
  }
}

double measure_mean_ns(const std::function<void()>& fn) {
  std::uint64_t reps = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (std::uint64_t i = 0; i < reps; ++i) fn();
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        Clock::now() - t0)
                        .count();
    if (ns >= 1'000'000 || reps >= (1ull << 24)) {
      return static_cast<double>(ns) / static_cast<double>(reps);
    }
    reps *= 2;
  }
}

// --- single-vertex activities ---------------------------------------------------

SingleVertexResult bench_single_vertex(const SingleVertexConfig& cfg) {
  if (cfg.kind != "cas" && cfg.kind != "acc")
    throw ConfigError("single-vertex kind must be cas or acc");
  if (cfg.reps < 1) throw ConfigError("repetitions must be >= 1");

  TxnEngine eng;
  eng.set_cost_model(cfg.cost);
  RunStats stats;
  CellArray cell(1);
  const bool is_cas = cfg.kind == "cas";
  const bool atomics = cfg.policy.mech == ExecPolicy::Mech::Atomics;

  auto one_rep = [&] {
    cell[0].unsafe_store(0);
    std::vector<std::thread> ts;
    ts.reserve(cfg.threads);
    for (unsigned t = 0; t < cfg.threads; ++t) {
      ts.emplace_back([&, t] {
        Rng rng(cfg.seed + t);
        for (int i = 0; i < cfg.ops; ++i) {
          if (atomics) {
            if (is_cas) {
              eng.atomic_cas(cell[0], 0, t + 1, &stats);
            } else {
              eng.atomic_acc(cell[0], 1, AccOp::U64Sum, &stats);
            }
          } else if (is_cas) {
            eng.execute(
                [&](Txn& tx) {
                  if (tx.read(cell[0]) == 0) tx.write(cell[0], t + 1);
                },
                cfg.policy.txn, stats, nullptr, &rng);
          } else {
            eng.execute(
                [&](Txn& tx) { tx.write(cell[0], tx.read(cell[0]) + 1); },
                cfg.policy.txn, stats, nullptr, &rng);
          }
        }
      });
    }
    for (auto& t : ts) t.join();
  };

  // Correctness gate before any timing.
  one_rep();
  const Word v = cell[0].peek();
  if (is_cas) {
    if (v == 0 || v > cfg.threads)
      throw ValidationError("single-vertex cas: vertex not marked correctly");
  } else if (v != static_cast<Word>(cfg.threads) * cfg.ops) {
    throw ValidationError("single-vertex acc: lost updates");
  }

  stats.reset();
  const auto t0 = Clock::now();
  for (int r = 0; r < cfg.reps; ++r) one_rep();
  const auto ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
          .count();

  SingleVertexResult res;
  res.cfg = cfg;
  res.mean_time_ns = static_cast<double>(ns) / cfg.reps;
  res.stats = stats.snapshot();
  check_accounting(res.stats);
  return res;
}

// --- coarsening sweep -------------------------------------------------------------

std::vector<CoarsenRow> bench_coarsen_sweep(const CoarsenSweepConfig& cfg) {
  if (cfg.m_values.empty()) throw ConfigError("coarsen sweep: empty M range");
  const Graph g = build_csr(cfg.graph, cfg.directed);
  validate_graph(g);
  const auto expected = oracle::bfs_distances(g, cfg.source);

  std::vector<CoarsenRow> rows;
  for (std::uint32_t m_value : cfg.m_values) {
    AlgoConfig ac;
    ac.procs = 1;
    ac.threads = cfg.threads;
    ac.coarsen_M = m_value;
    ac.policy = cfg.policy;
    ac.seed = cfg.seed;
    ac.cost = cfg.cost;

    std::vector<double> wall;
    std::vector<std::uint64_t> model;
    RunStats::Snapshot last{};
    for (int r = 0; r < cfg.reps; ++r) {
      RunStats::Snapshot st{};
      const auto t0 = Clock::now();
      const auto dist = bfs(g, cfg.source, ac, &st);
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          Clock::now() - t0)
                          .count();
      if (dist != expected)
        throw ValidationError("coarsen sweep: BFS diverged from oracle at M=" +
                              std::to_string(m_value));
      check_accounting(st);
      wall.push_back(static_cast<double>(ns));
      model.push_back(st.model_ns);
      last = st;
    }
    std::sort(wall.begin(), wall.end());
    std::sort(model.begin(), model.end());

    CoarsenRow row;
    row.m = m_value;
    row.wall_ns_median = wall[wall.size() / 2];
    row.model_ns = model[model.size() / 2];
    const std::uint64_t delivered =
        last.operators_executed + last.operators_skipped;
    row.model_ns_per_op =
        delivered ? static_cast<double>(row.model_ns) / delivered : 0.0;
    row.stats = last;
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- coalescing sweep ---------------------------------------------------------------

namespace {

RunStats::Snapshot run_coalesce_workload(const CoalesceSweepConfig& cfg,
                                         const ExecPolicy& policy,
                                         std::uint32_t c_value) {
  if (cfg.procs < 2) throw ConfigError("coalesce sweep needs >= 2 processes");
  const VertexId n = cfg.procs * cfg.count;
  MachineConfig mc;
  mc.procs = cfg.procs;
  mc.threads = 1;
  mc.coarsen_M = 1;
  mc.coalesce_C = c_value;
  mc.policy = policy;
  mc.seed = cfg.seed;
  mc.cost = cfg.cost;
  Machine m(n, mc);
  CellArray cells(n);
  const bool is_cas = cfg.kind == "cas";

  OperatorDef op;
  op.cls = kFFMF;
  op.body = [&cells, is_cas](Txn& t, VertexId v, Word) -> OperatorResult {
    if (is_cas) {
      const Word cur = t.read(cells[v]);
      if (cur != 0) return {true, 0};
      t.write(cells[v], 1);
      return {false, 0};
    }
    t.write(cells[v], t.read(cells[v]) + 1);
    return {false, 0};
  };
  op.atomic_body = [&cells, is_cas](Machine& mm, ProcId, VertexId v,
                                    Word) -> OperatorResult {
    if (is_cas) {
      const bool ok = mm.engine().atomic_cas(cells[v], 0, 1, &mm.stats());
      return {!ok, 0};
    }
    mm.engine().atomic_acc(cells[v], 1, AccOp::U64Sum, &mm.stats());
    return {false, 0};
  };
  const OperatorId oid = m.register_operator(std::move(op));

  // Process 0 touches `count` vertices owned by process 1.
  const VertexId base = m.partition().first_vertex(1);
  for (std::uint32_t i = 0; i < cfg.count; ++i) {
    m.spawn(0, {kFFMF, 1, oid, base + i, 0, kNoProc});
  }
  const auto st = m.run_to_quiescence();
  for (std::uint32_t i = 0; i < cfg.count; ++i) {
    if (cells[base + i].peek() != 1)
      throw ValidationError("coalesce workload: lost remote operation");
  }
  if (st.operators_executed + st.operators_skipped != cfg.count)
    throw ValidationError("coalesce workload: delivered count mismatch");
  check_accounting(st);
  return st;
}

}  // namespace

CoalesceResult bench_coalesce_sweep(const CoalesceSweepConfig& cfg) {
  if (cfg.c_values.empty()) throw ConfigError("coalesce sweep: empty C range");
  if (cfg.kind != "cas" && cfg.kind != "acc")
    throw ConfigError("coalesce kind must be cas or acc");
  CoalesceResult res;

  // Remote atomics baseline: single-element messages, one atomic each.
  const auto base_stats =
      run_coalesce_workload(cfg, ExecPolicy::parse("atomics"), 1);
  res.rows.push_back({"atomics", 1, base_stats.model_ns, base_stats});

  const ExecPolicy htm = ExecPolicy::parse("rtm");
  for (std::uint32_t c : cfg.c_values) {
    const auto st = run_coalesce_workload(cfg, htm, c);
    res.rows.push_back({"htm", c, st.model_ns, st});
    if (!res.crossover_c && st.model_ns < base_stats.model_ns) {
      res.crossover_c = c;
    }
  }
  return res;
}

// --- distributed scenarios ------------------------------------------------------------

DistributedResult bench_distributed(const DistributedConfig& cfg) {
  std::uint64_t x = 0;
  int a = 0, b = 0;
  if (cfg.scenario == "o1") {
    x = 1000, a = 5, b = 1;
  } else if (cfg.scenario == "o2") {
    x = 10000, a = 5, b = 1;
  } else if (cfg.scenario == "o3") {
    x = 1000, a = 7, b = 3;
  } else if (cfg.scenario == "o4") {
    x = 10000, a = 7, b = 3;
  } else {
    throw ConfigError("unknown scenario: " + cfg.scenario);
  }
  if (cfg.procs < 2) throw ConfigError("distributed scenarios need >= 2 processes");

  const VertexId n = cfg.procs * cfg.vertices_per_proc;
  MachineConfig mc;
  mc.procs = cfg.procs;
  mc.threads = 2;  // scenario drivers run on their own OS threads
  mc.policy = cfg.policy;
  mc.seed = cfg.seed;
  mc.watchdog = cfg.watchdog;
  Machine m(n, mc);
  CellArray marks(n);
  m.register_cells(marks);

  // Replay record: how often each vertex must end up marked.
  std::vector<std::vector<VertexId>> picks_per_proc(cfg.procs);

  auto proc_main = [&](ProcId p) {
    Rng rng(cfg.seed * 1315423911u + p);
    const VertexId lo = m.partition().first_vertex(p);
    const VertexId sz = m.partition().block_size(p);
    std::vector<VertexId> local, remote;
    auto& picks = picks_per_proc[p];
    for (std::uint64_t i = 0; i < x; ++i) {
      local.clear();
      remote.clear();
      while (local.size() < static_cast<size_t>(a)) {
        const VertexId v = lo + static_cast<VertexId>(rng.below(sz));
        if (std::find(local.begin(), local.end(), v) == local.end())
          local.push_back(v);
      }
      while (remote.size() < static_cast<size_t>(b)) {
        const VertexId v = static_cast<VertexId>(rng.below(n));
        if (m.partition().owner(v) == p) continue;
        if (std::find(remote.begin(), remote.end(), v) == remote.end())
          remote.push_back(v);
      }
      m.run_distributed_txn(p, local, remote, [&](Txn& t) {
        for (VertexId v : local) t.write(marks[v], t.read(marks[v]) + 1);
        for (VertexId v : remote) t.write(marks[v], t.read(marks[v]) + 1);
      });
      picks.insert(picks.end(), local.begin(), local.end());
      picks.insert(picks.end(), remote.begin(), remote.end());
    }
  };

  const auto t0 = Clock::now();
  std::vector<std::thread> drivers;
  for (ProcId p = 0; p < cfg.procs; ++p) drivers.emplace_back(proc_main, p);
  for (auto& d : drivers) d.join();
  const auto ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
          .count();

  // Sequential replay oracle: increments commute, so the multiset of picks
  // determines the unique final state.
  std::vector<std::uint64_t> replay(n, 0);
  for (auto& picks : picks_per_proc) {
    for (VertexId v : picks) replay[v]++;
  }
  bool ok = true;
  for (VertexId v = 0; v < n; ++v) {
    if (marks[v].peek() != replay[v]) ok = false;
    if (m.ownership().marker(v) != OwnershipTable::kBottom) ok = false;
  }

  DistributedResult res;
  res.scenario = cfg.scenario;
  res.x = x;
  res.local_marks = a;
  res.remote_marks = b;
  res.procs = cfg.procs;
  res.wall_ns = static_cast<double>(ns);
  res.replay_ok = ok;
  res.stats = m.stats().snapshot();
  check_accounting(res.stats);
  const std::uint64_t successes = res.stats.commits + res.stats.serializations;
  if (successes != x * cfg.procs)
    throw ValidationError("distributed scenario: commit count mismatch");
  return res;
}

// --- fit samples -------------------------------------------------------------------

std::vector<CostSample> activity_cost_samples(
    const std::vector<std::uint32_t>& sizes, int reps, const CostModel& cost,
    const RetryPolicy& policy) {
  if (sizes.empty()) throw ConfigError("fit samples: empty size list");
  CostModel enabled = cost;
  enabled.enabled = true;
  TxnEngine eng;
  eng.set_cost_model(enabled);
  const std::uint32_t max_n = *std::max_element(sizes.begin(), sizes.end());
  CellArray cells(max_n);
  Rng rng(1);

  std::vector<CostSample> out;
  for (std::uint32_t n : sizes) {
    RunStats st_txn, st_at;
    for (int r = 0; r < reps; ++r) {
      eng.execute(
          [&](Txn& t) {
            for (std::uint32_t i = 0; i < n; ++i)
              t.write(cells[i], t.read(cells[i]) + 1);
          },
          policy, st_txn, nullptr, &rng);
      for (std::uint32_t i = 0; i < n; ++i)
        eng.atomic_acc(cells[i], 1, AccOp::U64Sum, &st_at);
    }
    out.push_back(
        {"htm", n, static_cast<double>(st_txn.model_ns.load()) / reps});
    out.push_back(
        {"atomics", n, static_cast<double>(st_at.model_ns.load()) / reps});
  }
  return out;
}

// --- CSV renderers -----------------------------------------------------------------

Csv to_csv(const SingleVertexResult& r) {
  Csv csv;
  csv.header = {"benchmark", "kind",   "policy", "threads",
                "ops",       "reps",   "n_vertices", "mean_time_ns"};
  append_stat_header(csv.header);
  std::vector<std::string> row = {
      "single-vertex", r.cfg.kind,          r.cfg.policy.name,
      u64s(r.cfg.threads), u64s(r.cfg.ops), u64s(r.cfg.reps),
      "1",             f64s(r.mean_time_ns)};
  append_stat_row(row, r.stats, r.cfg.seed);
  csv.rows.push_back(std::move(row));
  return csv;
}

Csv to_csv(const CoarsenSweepConfig& cfg, const std::vector<CoarsenRow>& rows) {
  Csv csv;
  csv.header = {"benchmark", "M", "threads", "policy", "wall_ns_median",
                "model_ns_median", "model_ns_per_op"};
  append_stat_header(csv.header);
  for (const CoarsenRow& r : rows) {
    std::vector<std::string> row = {"coarsen-sweep",
                                    u64s(r.m),
                                    u64s(cfg.threads),
                                    cfg.policy.name,
                                    f64s(r.wall_ns_median),
                                    u64s(r.model_ns),
                                    f64s(r.model_ns_per_op)};
    append_stat_row(row, r.stats, cfg.seed);
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

Csv to_csv(const CoalesceSweepConfig& cfg, const CoalesceResult& r) {
  Csv csv;
  csv.header = {"benchmark", "kind", "mechanism", "C", "procs", "count",
                "model_ns"};
  append_stat_header(csv.header);
  for (const CoalesceRow& row_in : r.rows) {
    std::vector<std::string> row = {"coalesce-sweep", cfg.kind,
                                    row_in.mechanism, u64s(row_in.c),
                                    u64s(cfg.procs),  u64s(cfg.count),
                                    u64s(row_in.model_ns)};
    append_stat_row(row, row_in.stats, cfg.seed);
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

Csv to_csv(const DistributedResult& r) {
  Csv csv;
  csv.header = {"benchmark", "scenario", "x", "a", "b", "procs",
                "wall_ns",   "replay_ok"};
  append_stat_header(csv.header);
  std::vector<std::string> row = {"distributed",
                                  r.scenario,
                                  u64s(r.x),
                                  u64s(r.local_marks),
                                  u64s(r.remote_marks),
                                  u64s(r.procs),
                                  f64s(r.wall_ns),
                                  r.replay_ok ? "1" : "0"};
  append_stat_row(row, r.stats, 0);
  csv.rows.push_back(std::move(row));
  return csv;
}

Csv to_csv(const std::vector<CostSample>& samples) {
  Csv csv;
  csv.header = {"mechanism", "n_vertices", "mean_time_ns"};
  for (const CostSample& s : samples) {
    csv.rows.push_back({s.mechanism, u64s(s.n_vertices), f64s(s.mean_time_ns)});
  }
  return csv;
}

}  // namespace aam
