#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "aam/bench.hpp"

using namespace aam;

TEST_CASE("single-vertex cas with one thread never conflicts") {
  SingleVertexConfig cfg;
  cfg.kind = "cas";
  cfg.threads = 1;
  cfg.ops = 10;
  cfg.reps = 3;
  cfg.policy = ExecPolicy::parse("rtm");
  const auto res = bench_single_vertex(cfg);
  CHECK(res.stats.aborts_conflict == 0);
  CHECK(res.mean_time_ns > 0.0);
}

TEST_CASE("htm acc generates more conflicts than htm cas at equal threads") {
  auto run = [](const char* kind) {
    SingleVertexConfig cfg;
    cfg.kind = kind;
    cfg.threads = 4;
    cfg.ops = 100;
    cfg.reps = 20;
    cfg.seed = 5;
    cfg.policy = ExecPolicy::parse("rtm");
    return bench_single_vertex(cfg).stats;
  };
  const auto cas = run("cas");
  const auto acc = run("acc");
  // Once the vertex is marked, CAS transactions are read-only; every ACC
  // transaction writes and keeps conflicting.
  CHECK(acc.aborts_conflict > cas.aborts_conflict);
}

TEST_CASE("single-vertex accounting identity holds on every row") {
  for (const char* policy : {"rtm", "hle", "bgq-short", "atomics", "locks"}) {
    SingleVertexConfig cfg;
    cfg.kind = "acc";
    cfg.threads = 2;
    cfg.ops = 50;
    cfg.reps = 5;
    cfg.policy = ExecPolicy::parse(policy);
    const auto res = bench_single_vertex(cfg);
    CHECK(res.stats.total_aborts() == res.stats.aborts_conflict +
                                          res.stats.aborts_capacity +
                                          res.stats.aborts_other);
  }
}

TEST_CASE("coarsen sweep covers the requested M range and validates") {
  CoarsenSweepConfig cfg;
  cfg.graph = generate_kronecker(7, 8, 3);
  cfg.m_values = {1, 4, 16, 64};
  cfg.policy = ExecPolicy::parse("bgq-long");
  cfg.reps = 1;
  const auto rows = bench_coarsen_sweep(cfg);
  REQUIRE(rows.size() == 4);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].m == cfg.m_values[i]);
    CHECK(rows[i].stats.commits + rows[i].stats.serializations > 0);
  }
}

TEST_CASE("coarsening amortizes the per-transaction overhead") {
  CoarsenSweepConfig cfg;
  cfg.graph = generate_kronecker(9, 8, 11);
  cfg.m_values = {1, 2, 4, 8, 16};
  cfg.threads = 1;
  cfg.policy = ExecPolicy::parse("bgq-long");
  cfg.reps = 3;
  cfg.cost.enabled = true;
  const auto rows = bench_coarsen_sweep(cfg);
  REQUIRE(rows.size() == 5);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].model_ns_per_op < rows[i - 1].model_ns_per_op);
  }
}

TEST_CASE("coalesce sweep conserves operations and finds a crossover") {
  CoalesceSweepConfig cfg;
  cfg.procs = 2;
  cfg.count = 1 << 10;
  cfg.c_values = {1, 2, 4, 8, 16, 32};
  cfg.cost.enabled = true;
  const auto res = bench_coalesce_sweep(cfg);

  REQUIRE(res.rows.size() == 7);  // atomics baseline + six C values
  const auto& baseline = res.rows[0];
  CHECK(baseline.mechanism == "atomics");
  // C=1: one batch per message, equal to the unbatched baseline count.
  const auto& c1 = res.rows[1];
  CHECK(c1.c == 1);
  CHECK(c1.stats.batches_sent == cfg.count);
  CHECK(baseline.stats.batches_sent == cfg.count);
  // Conservation: every row delivered exactly `count` operations.
  for (const auto& row : res.rows) {
    CHECK(row.stats.operators_executed + row.stats.operators_skipped ==
          cfg.count);
  }
  // Per-message cost dominates per-element cost, so batching must win
  // somewhere in the swept range.
  REQUIRE(res.crossover_c.has_value());
  CHECK(*res.crossover_c > 0);
}

TEST_CASE("coalesce sweep acc variant also batches") {
  CoalesceSweepConfig cfg;
  cfg.kind = "acc";
  cfg.procs = 2;
  cfg.count = 256;
  cfg.c_values = {1, 16};
  cfg.cost.enabled = true;
  const auto res = bench_coalesce_sweep(cfg);
  CHECK(res.rows[2].stats.batches_sent == 256 / 16);
}

TEST_CASE("distributed scenario o1 commits exactly x per process") {
  DistributedConfig cfg;
  cfg.scenario = "o1";
  cfg.procs = 2;
  cfg.vertices_per_proc = 512;
  cfg.policy = ExecPolicy::parse("rtm");
  const auto res = bench_distributed(cfg);
  CHECK(res.x == 1000);
  CHECK(res.stats.commits + res.stats.serializations == 1000 * 2);
  CHECK(res.replay_ok);
}

TEST_CASE("more remote vertices cannot reduce backoffs") {
  auto run = [](const char* scenario) {
    DistributedConfig cfg;
    cfg.scenario = scenario;
    cfg.procs = 2;
    cfg.vertices_per_proc = 64;  // small space forces marker contention
    cfg.seed = 9;
    cfg.policy = ExecPolicy::parse("rtm");
    return bench_distributed(cfg);
  };
  const auto o1 = run("o1");
  const auto o3 = run("o3");
  CHECK(o1.replay_ok);
  CHECK(o3.replay_ok);
  CHECK(o3.stats.ownership_backoffs >= o1.stats.ownership_backoffs);
}

TEST_CASE("csv rendering is stable and complete") {
  SingleVertexConfig cfg;
  cfg.kind = "cas";
  cfg.threads = 1;
  cfg.ops = 10;
  cfg.reps = 1;
  cfg.policy = ExecPolicy::parse("rtm");
  const auto res = bench_single_vertex(cfg);
  const Csv csv = to_csv(res);
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.header.size() == csv.rows[0].size());
  std::ostringstream os;
  csv.write(os);
  CHECK(os.str().find("single-vertex,cas,rtm") != std::string::npos);
  CHECK(os.str().find("build") != std::string::npos);
}

TEST_CASE("measured wall time is positive and batched") {
  const double ns = measure_mean_ns([] {
    volatile int x = 0;
    for (int i = 0; i < 100; ++i) x = x + i;
  });
  CHECK(ns > 0.0);
}
