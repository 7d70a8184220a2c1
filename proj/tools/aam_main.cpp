// aam: activity/transaction runtime driver.
//
//   aam run   --algorithm bfs|pr|mst|st|color --graph <spec> [flags]
//   aam bench single-vertex|coarsen-sweep|coalesce-sweep|distributed [flags]
//   aam fit   --input <csv>
//
// Graph specs: kron:<scale>,<edge_factor> | er:<n>,<p> | file:<path>.
// CSV goes to stdout (or --out); human-readable summaries go to stderr.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "aam/bench.hpp"

namespace {

using namespace aam;

std::vector<std::uint32_t> parse_range(const std::string& spec) {
  std::vector<std::uint32_t> out;
  if (spec.find(':') != std::string::npos) {
    std::uint32_t lo = 0, hi = 0, step = 1;
    if (std::sscanf(spec.c_str(), "%u:%u:%u", &lo, &hi, &step) < 2 ||
        step == 0 || lo > hi) {
      throw ConfigError("bad range spec: " + spec);
    }
    for (std::uint32_t v = lo; v <= hi; v += step) out.push_back(v);
    return out;
  }
  size_t pos = 0;
  while (pos <= spec.size()) {
    const size_t comma = spec.find(',', pos);
    const std::string tok =
        spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (tok.empty()) throw ConfigError("bad range spec: " + spec);
    out.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("bad range spec: " + spec);
  return out;
}

void emit(const Csv& csv, const std::string& out_path) {
  if (out_path.empty()) {
    csv.write(std::cout);
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw ConfigError("cannot open output file: " + out_path);
  csv.write(f);
}

struct CostFlags {
  bool enabled = false;
  CostModel model;
  double net_latency_us = -1.0;

  void attach(CLI::App& app) {
    app.add_flag("--cost-model", enabled,
                 "enable the synthetic cost model (model_ns accounting)");
    app.add_option("--txn-fixed-ns", model.txn_fixed_ns,
                   "model cost of one transaction begin+commit");
    app.add_option("--txn-access-ns", model.txn_per_access_ns,
                   "model cost per distinct cell in a transaction");
    app.add_option("--atomic-ns", model.atomic_op_ns,
                   "model cost of one atomic operation");
    app.add_option("--msg-fixed-ns", model.msg_fixed_ns,
                   "model cost per network batch");
    app.add_option("--msg-elem-ns", model.msg_per_element_ns,
                   "model cost per message inside a batch");
    app.add_option("--net-latency", net_latency_us,
                   "per-batch latency in microseconds (sets --msg-fixed-ns)");
  }
  CostModel resolve() const {
    CostModel m = model;
    m.enabled = enabled || net_latency_us >= 0.0;
    if (net_latency_us >= 0.0)
      m.msg_fixed_ns = static_cast<std::uint64_t>(net_latency_us * 1000.0);
    return m;
  }
};

int run_algorithm(const std::string& algo, const std::string& graph_spec,
                  AlgoConfig cfg, VertexId source, double damping, int iters,
                  VertexId st_s, VertexId st_t, std::uint64_t weights_seed,
                  bool validate, const std::string& out_path) {
  EdgeList list = parse_graph_spec(graph_spec, cfg.seed);
  if (algo == "mst" && !list.weighted)
    synthesize_distinct_weights(list, weights_seed);
  const Graph g = build_csr(list, /*directed=*/false);
  validate_graph(g);

  RunStats::Snapshot st{};
  std::string result;
  bool valid = true;
  if (algo == "bfs") {
    const auto dist = bfs(g, source, cfg, &st);
    if (validate) valid = dist == oracle::bfs_distances(g, source);
    std::uint64_t reached = 0;
    for (auto d : dist) reached += d != kUnvisited;
    result = "reached=" + std::to_string(reached);
  } else if (algo == "pr") {
    const auto rank = pagerank(g, damping, iters, cfg, &st);
    if (validate) {
      const auto want = oracle::pagerank(g, damping, iters);
      for (VertexId v = 0; v < g.n && valid; ++v)
        valid = std::abs(rank[v] - want[v]) < 1e-9;
    }
    double sum = 0;
    for (double r : rank) sum += r;
    result = "rank_sum=" + std::to_string(sum);
  } else if (algo == "mst") {
    const auto mst = boruvka_mst(g, cfg, &st);
    if (validate) {
      const auto want = oracle::kruskal_msf(g);
      valid = mst.edges == want.edges;
    }
    result = "weight=" + std::to_string(mst.total_weight) +
             " edges=" + std::to_string(mst.edges.size());
  } else if (algo == "st") {
    const bool conn = st_connected(g, st_s, st_t, cfg, &st);
    if (validate) valid = conn == oracle::connected(g, st_s, st_t);
    result = conn ? "connected" : "disconnected";
  } else if (algo == "color") {
    const auto colors = boman_coloring(g, cfg, &st);
    if (validate) valid = oracle::coloring_valid(g, colors);
    std::uint32_t max_c = 0;
    for (auto c : colors) max_c = std::max(max_c, c);
    result = "colors=" + std::to_string(max_c + 1);
  } else {
    throw ConfigError("unknown algorithm: " + algo);
  }

  Csv csv;
  csv.header = {"algorithm", "graph",   "policy",   "M",      "C",
                "threads",   "procs",   "result",   "commits",
                "aborts_conflict", "aborts_capacity", "aborts_other",
                "serializations",  "operator_failures", "operators_executed",
                "operators_skipped", "ownership_backoffs", "messages_sent",
                "batches_sent", "model_ns", "seed", "build"};
  csv.rows.push_back({algo, graph_spec, cfg.policy.name,
                      std::to_string(cfg.coarsen_M),
                      std::to_string(cfg.coalesce_C),
                      std::to_string(cfg.threads), std::to_string(cfg.procs),
                      result, std::to_string(st.commits),
                      std::to_string(st.aborts_conflict),
                      std::to_string(st.aborts_capacity),
                      std::to_string(st.aborts_other),
                      std::to_string(st.serializations),
                      std::to_string(st.operator_failures),
                      std::to_string(st.operators_executed),
                      std::to_string(st.operators_skipped),
                      std::to_string(st.ownership_backoffs),
                      std::to_string(st.messages_sent),
                      std::to_string(st.batches_sent),
                      std::to_string(st.model_ns), std::to_string(cfg.seed),
#ifdef AAM_BUILD_ID
                      AAM_BUILD_ID
#else
                      "unknown"
#endif
  });
  emit(csv, out_path);
  std::cerr << "aam run " << algo << ": " << result
            << (validate ? (valid ? " [oracle ok]" : " [ORACLE MISMATCH]")
                         : "")
            << "\n";
  if (validate && !valid) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atomic-active-message graph runtime"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "run one algorithm and emit stats");
  std::string algo = "bfs", graph_spec = "kron:10,16", policy_spec = "rtm";
  std::string out_path;
  AlgoConfig acfg;
  VertexId source = 0, st_s = 0, st_t = 1;
  double damping = 0.85;
  int iters = 10;
  std::uint64_t weights_seed = 7;
  bool no_validate = false;
  CostFlags run_cost;
  run->add_option("--algorithm", algo, "bfs|pr|mst|st|color")->required();
  run->add_option("--graph", graph_spec, "graph spec");
  run->add_option("--policy", policy_spec,
                  "rtm|hle|bgq-short|bgq-long|atomics|locks");
  run->add_option("--coarsen", acfg.coarsen_M, "activity coarsening factor M");
  run->add_option("--coalesce", acfg.coalesce_C, "message coalescing factor C");
  run->add_option("--threads", acfg.threads, "worker threads per process");
  run->add_option("--procs", acfg.procs, "simulated processes N");
  run->add_option("--seed", acfg.seed, "base RNG seed");
  run->add_option("--source", source, "BFS source vertex");
  run->add_option("--damping", damping, "PageRank damping factor");
  run->add_option("--iters", iters, "PageRank iterations");
  run->add_option("--s", st_s, "ST source");
  run->add_option("--t", st_t, "ST target");
  run->add_option("--weights-seed", weights_seed,
                  "seed for synthesized MST weights");
  run->add_flag("--no-validate", no_validate, "skip the oracle check");
  run->add_option("--out", out_path, "write CSV here instead of stdout");
  run_cost.attach(*run);

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "reproduce an experiment shape");
  bench->require_subcommand(1);

  auto* sv = bench->add_subcommand("single-vertex",
                                   "mark/increment one shared vertex");
  SingleVertexConfig svc;
  std::string sv_policy = "rtm";
  CostFlags sv_cost;
  sv->add_option("--kind", svc.kind, "cas|acc");
  sv->add_option("--ops", svc.ops, "operations per vertex per thread");
  sv->add_option("--threads", svc.threads, "threads");
  sv->add_option("--policy", sv_policy, "policy spec");
  sv->add_option("--reps", svc.reps, "repetitions");
  sv->add_option("--seed", svc.seed, "seed");
  sv->add_option("--out", out_path, "output path");
  sv_cost.attach(*sv);

  auto* cs = bench->add_subcommand("coarsen-sweep", "full BFS per M value");
  CoarsenSweepConfig csc;
  std::string cs_graph = "kron:12,16", cs_policy = "bgq-short",
              cs_m = "1:320:16";
  CostFlags cs_cost;
  cs->add_option("--graph", cs_graph, "graph spec");
  cs->add_option("--m", cs_m, "M range lo:hi:step or comma list");
  cs->add_option("--threads", csc.threads, "threads");
  cs->add_option("--policy", cs_policy, "policy spec");
  cs->add_option("--reps", csc.reps, "repetitions per M");
  cs->add_option("--seed", csc.seed, "seed");
  cs->add_option("--source", csc.source, "BFS source");
  cs->add_option("--out", out_path, "output path");
  cs_cost.attach(*cs);

  auto* cl = bench->add_subcommand("coalesce-sweep",
                                   "remote activities vs remote atomics");
  CoalesceSweepConfig clc;
  std::string cl_c = "1,2,4,8,16,32,64";
  CostFlags cl_cost;
  cl_cost.enabled = true;
  cl->add_option("--procs", clc.procs, "simulated processes");
  cl->add_option("--c", cl_c, "C range");
  cl->add_option("--kind", clc.kind, "cas|acc");
  cl->add_option("--count", clc.count, "remote elements touched");
  cl->add_option("--seed", clc.seed, "seed");
  cl->add_option("--out", out_path, "output path");
  cl_cost.attach(*cl);

  auto* ds = bench->add_subcommand("distributed",
                                   "ownership-protocol scenarios O-1..O-4");
  DistributedConfig dsc;
  std::string ds_policy = "rtm";
  ds->add_option("--scenario", dsc.scenario, "o1|o2|o3|o4");
  ds->add_option("--procs", dsc.procs, "processes");
  ds->add_option("--vertices-per-proc", dsc.vertices_per_proc,
                 "owned vertices per process");
  ds->add_option("--policy", ds_policy, "policy spec");
  ds->add_option("--seed", dsc.seed, "seed");
  ds->add_option("--out", out_path, "output path");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "linear fits and the crossing point");
  std::string fit_input;
  fit->add_option("--input,input", fit_input, "CostSample CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      acfg.policy = ExecPolicy::parse(policy_spec);
      acfg.cost = run_cost.resolve();
      return run_algorithm(algo, graph_spec, acfg, source, damping, iters,
                           st_s, st_t, weights_seed, !no_validate, out_path);
    }
    if (sv->parsed()) {
      svc.policy = ExecPolicy::parse(sv_policy);
      svc.cost = sv_cost.resolve();
      const auto res = bench_single_vertex(svc);
      emit(to_csv(res), out_path);
      std::cerr << "single-vertex " << svc.kind << ": "
                << res.mean_time_ns / 1000.0 << " us/rep, aborts="
                << res.stats.total_aborts() << "\n";
      return 0;
    }
    if (cs->parsed()) {
      csc.graph = parse_graph_spec(cs_graph, csc.seed);
      csc.policy = ExecPolicy::parse(cs_policy);
      csc.m_values = parse_range(cs_m);
      csc.cost = cs_cost.resolve();
      const auto rows = bench_coarsen_sweep(csc);
      emit(to_csv(csc, rows), out_path);
      std::cerr << "coarsen-sweep: " << rows.size() << " rows (oracle ok)\n";
      return 0;
    }
    if (cl->parsed()) {
      clc.c_values = parse_range(cl_c);
      clc.cost = cl_cost.resolve();
      const auto res = bench_coalesce_sweep(clc);
      emit(to_csv(clc, res), out_path);
      if (res.crossover_c) {
        std::cerr << "coalesce-sweep: batched activities beat remote atomics"
                     " at C = "
                  << *res.crossover_c << "\n";
      } else {
        std::cerr << "coalesce-sweep: no crossover in the swept range\n";
      }
      return 0;
    }
    if (ds->parsed()) {
      dsc.policy = ExecPolicy::parse(ds_policy);
      const auto res = bench_distributed(dsc);
      emit(to_csv(res), out_path);
      std::cerr << "distributed " << res.scenario << ": "
                << res.wall_ns / 1e6 << " ms, backoffs="
                << res.stats.ownership_backoffs
                << (res.replay_ok ? " [replay ok]" : " [REPLAY MISMATCH]")
                << "\n";
      return res.replay_ok ? 0 : 1;
    }
    if (fit->parsed()) {
      const auto samples = load_cost_samples(fit_input);
      std::vector<CostSample> at, htm;
      for (const auto& s : samples) {
        (s.mechanism == "atomics" ? at : htm).push_back(s);
      }
      const LinearFit fa = fit_linear(at);
      const LinearFit fh = fit_linear(htm);
      const Crossing cx = crossing_point(fa, fh);
      Csv csv;
      csv.header = {"mechanism", "slope_ns", "intercept_ns", "r2",
                    "crossing_n"};
      const std::string nstar =
          cx.exists ? std::to_string(cx.n_star) : "none";
      csv.rows.push_back({"atomics", std::to_string(fa.slope),
                          std::to_string(fa.intercept), std::to_string(fa.r2),
                          nstar});
      csv.rows.push_back({"htm", std::to_string(fh.slope),
                          std::to_string(fh.intercept), std::to_string(fh.r2),
                          nstar});
      emit(csv, out_path);
      if (cx.exists) {
        std::cerr << "crossing point N* = " << cx.n_star << "\n";
      } else {
        std::cerr << "no crossing point: " << cx.reason << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
