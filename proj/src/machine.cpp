#include "aam/machine.hpp"

#include <algorithm>
#include <thread>

namespace aam {

OwnershipTable::OwnershipTable(size_t n)
    : n_(n), markers_(std::make_unique<std::atomic<std::int32_t>[]>(n)) {
  for (size_t i = 0; i < n; ++i)
    markers_[i].store(kBottom, std::memory_order_relaxed);
}

bool OwnershipTable::try_acquire(ProcId p, VertexId v) {
  std::int32_t expect = kBottom;
  return markers_[v].compare_exchange_strong(
      expect, static_cast<std::int32_t>(p), std::memory_order_acq_rel);
}

void OwnershipTable::release(ProcId p, VertexId v) {
  std::int32_t expect = static_cast<std::int32_t>(p);
  if (!markers_[v].compare_exchange_strong(expect, kBottom,
                                           std::memory_order_acq_rel)) {
    throw ContractError("ownership_release: marker not held by caller");
  }
}

Machine::Machine(VertexId n_elements, MachineConfig cfg)
    : cfg_(std::move(cfg)),
      part_(n_elements, cfg_.procs),
      owners_(n_elements),
      driver_rng_(cfg_.seed) {
  if (cfg_.procs < 1) throw ConfigError("procs must be >= 1");
  if (cfg_.coarsen_M < 1) throw ConfigError("coarsen M must be >= 1");
  if (cfg_.coalesce_C < 1) throw ConfigError("coalesce C must be >= 1");
  engine_.set_deterministic(cfg_.deterministic());
  engine_.set_cost_model(cfg_.cost);
  procs_.reserve(cfg_.procs);
  for (ProcId p = 0; p < cfg_.procs; ++p) {
    auto sp = std::make_unique<SimProcess>();
    sp->pid = p;
    sp->coalesce.resize(cfg_.procs);
    procs_.push_back(std::move(sp));
  }
}

Machine::~Machine() = default;

OperatorId Machine::register_operator(OperatorDef def) {
  if (sealed_)
    throw ContractError("register_operator: dispatch table already sealed");
  if (def.skip_check && def.cls.flow == DataFlow::FireAndReturn)
    throw ContractError("skip_check is only valid for fire-and-forget");
  registry_.push_back(std::move(def));
  return static_cast<OperatorId>(registry_.size() - 1);
}

void Machine::register_cells(CellArray& arr) {
  if (sealed_) throw ContractError("register_cells after start");
  cell_ranges_.push_back({&arr[0], arr.size()});
}

void Machine::seal() { sealed_ = true; }

VertexId Machine::element_of(const Cell* c) const {
  for (const CellRange& r : cell_ranges_) {
    if (c >= r.base && c < r.base + r.n)
      return static_cast<VertexId>(c - r.base);
  }
  return kNoVertex;
}

AccessGuard Machine::make_guard(ProcId p) {
  AccessGuard g;
  g.check = [this, p](const Cell& c) -> AccessGuard::Decision {
    const VertexId v = element_of(&c);
    if (v == kNoVertex) return {AccessGuard::Verdict::Ok, kNoVertex};
    const std::int32_t m = owners_.marker(v);
    if (m == static_cast<std::int32_t>(p))
      return {AccessGuard::Verdict::Ok, kNoVertex};
    if (part_.owner(v) == p) {
      // A marked element is relocated: local transactions abort on it.
      if (m == OwnershipTable::kBottom)
        return {AccessGuard::Verdict::Ok, kNoVertex};
      return {AccessGuard::Verdict::Conflict, kNoVertex};
    }
    return {AccessGuard::Verdict::NeedsRemote, v};
  };
  return g;
}

Rng& Machine::thread_rng() {
  struct Slot {
    const Machine* owner = nullptr;
    std::unique_ptr<Rng> rng;
  };
  thread_local Slot slot;
  if (slot.owner != this) {
    slot.owner = this;
    const std::uint32_t k = rng_counter_.fetch_add(1, std::memory_order_relaxed);
    slot.rng = std::make_unique<Rng>(cfg_.seed * 0x9E3779B97F4A7C15ull +
                                     0x243F6A8885A308D3ull * (k + 1));
  }
  return *slot.rng;
}

// --- message routing ---------------------------------------------------------

void Machine::spawn(ProcId src, const AtomicMessage& msg) {
  if (!sealed_) seal();
  if (src >= cfg_.procs || msg.target >= cfg_.procs)
    throw ContractError("spawn: process id out of range");
  if (msg.op >= registry_.size())
    throw ContractError("spawn: unknown operator id");
  const OperatorDef& def = registry_[msg.op];
  if (!(def.cls == msg.cls))
    throw ContractError("spawn: message class does not match operator");
  if (msg.cls.flow == DataFlow::FireAndReturn && msg.reply_to == kNoProc)
    throw ContractError("spawn: fire-and-return message without reply_to");
  if (msg.cls.flow == DataFlow::FireAndForget && msg.reply_to != kNoProc)
    throw ContractError("spawn: fire-and-forget message carries reply_to");
  if (part_.owner(msg.element) != msg.target)
    throw ContractError("spawn: target is not the owner of the element");

  spawned_.fetch_add(1, std::memory_order_relaxed);
  pending_.fetch_add(1, std::memory_order_acq_rel);

  if (msg.target == src) {
    SimProcess& proc = *procs_[src];
    std::lock_guard<std::mutex> g(proc.work_mu);
    proc.queue.push_back(
        {msg.op, msg.element, msg.param, msg.cls, msg.reply_to});
    return;
  }
  SimProcess& proc = *procs_[src];
  std::lock_guard<std::mutex> g(proc.work_mu);
  auto& buf = proc.coalesce[msg.target];
  buf.push_back(msg);
  if (buf.size() >= cfg_.coalesce_C) {
    std::vector<AtomicMessage> batch;
    batch.swap(buf);
    // Pushed under work_mu so per-pair delivery keeps send order.
    deliver_batch(msg.target, std::move(batch));
  }
}

void Machine::deliver_batch(ProcId dst, std::vector<AtomicMessage> batch) {
  stats_.batches_sent.fetch_add(1, std::memory_order_relaxed);
  stats_.messages_sent.fetch_add(batch.size(), std::memory_order_relaxed);
  engine_.charge_batch(stats_, batch.size());
  SimProcess& target = *procs_[dst];
  std::lock_guard<std::mutex> g(target.mb_mu);
  target.mailbox.emplace_back(std::move(batch));
}

void Machine::flush_all(ProcId src) {
  SimProcess& proc = *procs_[src];
  std::lock_guard<std::mutex> g(proc.work_mu);
  for (ProcId dst = 0; dst < cfg_.procs; ++dst) {
    if (proc.coalesce[dst].empty()) continue;
    std::vector<AtomicMessage> batch;
    batch.swap(proc.coalesce[dst]);
    deliver_batch(dst, std::move(batch));
  }
}

Activity Machine::coarsen(SimProcess& proc) {
  Activity act;
  std::lock_guard<std::mutex> g(proc.work_mu);
  const size_t take = std::min<size_t>(cfg_.coarsen_M, proc.queue.size());
  act.ops.reserve(take);
  for (size_t i = 0; i < take; ++i) {
    act.ops.push_back(std::move(proc.queue.front()));
    proc.queue.pop_front();
  }
  if (cfg_.order == CoarsenOrder::SortByElement) {
    std::stable_sort(act.ops.begin(), act.ops.end(),
                     [](const PendingOp& a, const PendingOp& b) {
                       return a.element < b.element;
                     });
  }
  return act;
}

// --- activity execution ------------------------------------------------------

void Machine::execute_htm(ProcId p, Activity& act,
                          std::vector<OperatorResult>& out) {
  AccessGuard guard = make_guard(p);
  const AccessGuard* gp = cfg_.procs > 1 ? &guard : nullptr;
  Rng& rng = thread_rng();
  std::vector<VertexId> held;
  int acquire_fails = 0;

  auto body = [&](Txn& t) {
    out.clear();
    for (const PendingOp& op : act.ops) {
      out.push_back(registry_[op.op].body(t, op.element, op.param));
    }
  };

  for (;;) {
    CommitOutcome oc = engine_.execute(body, cfg_.policy.txn, stats_, gp, &rng);
    if (oc.kind != OutcomeKind::NeedsRemote) break;
    // The transaction aborted on its first touch of a remote element; mark
    // it, pulling it into this process, and retry. On a lost race release
    // everything held and back off for a random time.
    if (owners_.try_acquire(p, oc.remote_element)) {
      held.push_back(oc.remote_element);
      continue;
    }
    for (VertexId h : held) owners_.release(p, h);
    held.clear();
    stats_.ownership_backoffs.fetch_add(1, std::memory_order_relaxed);
    ownership_backoff(rng, acquire_fails++);
  }
  for (VertexId h : held) owners_.release(p, h);
}

void Machine::ownership_backoff(Rng& rng, int consecutive_fails) {
  if (cfg_.deterministic()) return;
  // Uniform in [0, 2^k * base], base 10us, capped at 10ms.
  std::uint64_t cap = std::min<std::uint64_t>(
      10'000'000ull, 10'000ull << std::min(consecutive_fails, 10));
  std::this_thread::sleep_for(std::chrono::nanoseconds(rng.below(cap + 1)));
}

void Machine::execute_atomics(ProcId p, Activity& act,
                              std::vector<OperatorResult>& out) {
  for (const PendingOp& op : act.ops) {
    const OperatorDef& def = registry_[op.op];
    if (def.atomic_body) {
      out.push_back(def.atomic_body(*this, p, op.element, op.param));
    } else {
      // No single-word lowering: run as a critical section.
      OperatorResult r;
      engine_.run_critical(
          [&](Txn& t) { r = def.body(t, op.element, op.param); }, stats_);
      out.push_back(r);
    }
  }
}

void Machine::execute_activity(ProcId p, Activity& act) {
  const size_t arrived = act.ops.size();
  // Pre-transaction filter (e.g. the BFS visited check).
  std::erase_if(act.ops, [&](const PendingOp& op) {
    const OperatorDef& def = registry_[op.op];
    if (def.skip_check && def.skip_check(op.element, op.param)) {
      stats_.operators_skipped.fetch_add(1, std::memory_order_relaxed);
      return true;
    }
    return false;
  });

  if (!act.ops.empty()) {
    std::vector<OperatorResult> results;
    results.reserve(act.ops.size());
    if (cfg_.policy.mech == ExecPolicy::Mech::Atomics) {
      execute_atomics(p, act, results);
    } else {
      execute_htm(p, act, results);
    }
    postprocess(p, act, results);
  }
  consumed_.fetch_add(arrived, std::memory_order_relaxed);
  pending_.fetch_sub(arrived, std::memory_order_acq_rel);
}

void Machine::postprocess(ProcId p, const Activity& act,
                          const std::vector<OperatorResult>& results) {
  for (size_t i = 0; i < act.ops.size(); ++i) {
    const PendingOp& op = act.ops[i];
    const OperatorResult& r = results[i];
    const OperatorDef& def = registry_[op.op];
    stats_.operators_executed.fetch_add(1, std::memory_order_relaxed);
    if (r.failed) {
      if (op.cls.commit == CommitMode::AlwaysSucceed)
        throw ContractError("always-succeed operator reported failure");
      stats_.operator_failures.fetch_add(1, std::memory_order_relaxed);
    }
    if (def.result_sink) def.result_sink(p, op.element, op.param, r);
    if (op.cls.flow == DataFlow::FireAndReturn) {
      ReplyItem reply{
          AtomicMessage{op.cls, p, op.op, op.element, op.param, op.reply_to},
          r};
      if (op.reply_to == p) {
        deliver_result(reply);
      } else {
        spawned_.fetch_add(1, std::memory_order_relaxed);
        pending_.fetch_add(1, std::memory_order_acq_rel);
        stats_.batches_sent.fetch_add(1, std::memory_order_relaxed);
        stats_.messages_sent.fetch_add(1, std::memory_order_relaxed);
        engine_.charge_batch(stats_, 1);
        SimProcess& target = *procs_[op.reply_to];
        std::lock_guard<std::mutex> g(target.mb_mu);
        target.mailbox.emplace_back(std::vector<ReplyItem>{std::move(reply)});
      }
    }
  }
}

void Machine::deliver_result(const ReplyItem& reply) {
  const OperatorDef& def = registry_[reply.msg.op];
  if (!def.failure_handler)
    throw ContractError("deliver_result: no failure handler registered");
  def.failure_handler(*this, reply.msg.reply_to, reply.msg, reply.result);
}

// --- quiescence drivers ------------------------------------------------------

void Machine::handle_mail_item(ProcId p, SimProcess::MailItem item) {
  if (auto* ops = std::get_if<std::vector<AtomicMessage>>(&item)) {
    SimProcess& proc = *procs_[p];
    std::lock_guard<std::mutex> g(proc.work_mu);
    for (AtomicMessage& m : *ops) {
      proc.queue.push_back({m.op, m.element, m.param, m.cls, m.reply_to});
    }
  } else {
    auto& replies = std::get<std::vector<ReplyItem>>(item);
    for (const ReplyItem& r : replies) {
      deliver_result(r);
      consumed_.fetch_add(1, std::memory_order_relaxed);
      pending_.fetch_sub(1, std::memory_order_acq_rel);
    }
  }
}

bool Machine::worker_pass(ProcId p) {
  SimProcess& proc = *procs_[p];
  {
    std::unique_lock<std::mutex> g(proc.mb_mu);
    if (!proc.mailbox.empty()) {
      SimProcess::MailItem item = std::move(proc.mailbox.front());
      proc.mailbox.pop_front();
      g.unlock();
      handle_mail_item(p, item);
      return true;
    }
  }
  {
    Activity act = coarsen(proc);
    if (!act.ops.empty()) {
      execute_activity(p, act);
      return true;
    }
  }
  {
    // Idle: push out partially filled coalescing buffers so the system can
    // reach quiescence.
    std::lock_guard<std::mutex> g(proc.work_mu);
    for (ProcId dst = 0; dst < cfg_.procs; ++dst) {
      if (proc.coalesce[dst].empty()) continue;
      std::vector<AtomicMessage> batch;
      batch.swap(proc.coalesce[dst]);
      deliver_batch(dst, std::move(batch));
      return true;
    }
  }
  return false;
}

void Machine::run_deterministic() {
  const auto deadline = std::chrono::steady_clock::now() + cfg_.watchdog;
  std::uint64_t iters = 0;
  std::vector<ProcId> actionable;
  while (pending_.load(std::memory_order_acquire) > 0 && !cancelled()) {
    actionable.clear();
    for (ProcId p = 0; p < cfg_.procs; ++p) {
      SimProcess& proc = *procs_[p];
      bool has = !proc.mailbox.empty() || !proc.queue.empty();
      if (!has) {
        for (auto& b : proc.coalesce) {
          if (!b.empty()) {
            has = true;
            break;
          }
        }
      }
      if (has) actionable.push_back(p);
    }
    if (actionable.empty())
      throw ContractError("quiescence accounting broken: pending work lost");
    worker_pass(actionable[driver_rng_.below(actionable.size())]);
    if ((++iters & 0xFFF) == 0 &&
        std::chrono::steady_clock::now() > deadline) {
      throw WatchdogError("no quiescence within the configured budget");
    }
  }
}

void Machine::run_threaded() {
  std::atomic<bool> watchdog_fired{false};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(cfg_.procs) * cfg_.threads);
  for (ProcId p = 0; p < cfg_.procs; ++p) {
    for (unsigned t = 0; t < cfg_.threads; ++t) {
      workers.emplace_back([this, p, &watchdog_fired] {
        while (!cancelled() && !watchdog_fired.load(std::memory_order_acquire)) {
          if (worker_pass(p)) continue;
          if (pending_.load(std::memory_order_acquire) == 0) break;
          std::this_thread::yield();
        }
      });
    }
  }
  // Watchdog: no consumption progress within the budget means livelock.
  std::uint64_t last_consumed = consumed_.load();
  auto last_change = std::chrono::steady_clock::now();
  while (pending_.load(std::memory_order_acquire) > 0 && !cancelled() &&
         !watchdog_fired.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    const std::uint64_t c = consumed_.load();
    if (c != last_consumed) {
      last_consumed = c;
      last_change = std::chrono::steady_clock::now();
    } else if (std::chrono::steady_clock::now() - last_change >
               cfg_.watchdog) {
      watchdog_fired.store(true, std::memory_order_release);
    }
  }
  for (auto& w : workers) w.join();
  if (watchdog_fired.load()) {
    throw WatchdogError("no quiescence within the configured budget");
  }
}

RunStats::Snapshot Machine::run_to_quiescence() {
  if (!sealed_) seal();
  if (pending_.load(std::memory_order_acquire) > 0) {
    if (cfg_.deterministic()) {
      run_deterministic();
    } else {
      run_threaded();
    }
  }
  if (cancelled()) {
    // Drop undelivered work.
    for (auto& sp : procs_) {
      std::scoped_lock g(sp->mb_mu, sp->work_mu);
      sp->mailbox.clear();
      sp->queue.clear();
      for (auto& b : sp->coalesce) b.clear();
    }
    pending_.store(0, std::memory_order_release);
  }
  return stats_.snapshot();
}

// --- ownership protocol ------------------------------------------------------

AcquireOutcome Machine::ownership_acquire(ProcId p,
                                          std::span<const VertexId> elems) {
  std::vector<VertexId> sorted(elems.begin(), elems.end());
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (!owners_.try_acquire(p, sorted[i])) {
      // All-or-nothing: rewind everything marked so far.
      for (size_t j = 0; j < i; ++j) owners_.release(p, sorted[j]);
      return AcquireOutcome::Backoff;
    }
  }
  return AcquireOutcome::Acquired;
}

void Machine::ownership_release(ProcId p, std::span<const VertexId> elems) {
  for (VertexId v : elems) owners_.release(p, v);
}

CommitOutcome Machine::run_distributed_txn(ProcId p,
                                           std::span<const VertexId> local,
                                           std::span<const VertexId> remote,
                                           const TxnEngine::Body& body) {
  for (VertexId v : local) {
    if (part_.owner(v) != p)
      throw ContractError("run_distributed_txn: local element not owned");
  }
  if (!sealed_) seal();
  AccessGuard guard = make_guard(p);
  const AccessGuard* gp = cfg_.procs > 1 ? &guard : nullptr;
  Rng& rng = thread_rng();
  const auto deadline = std::chrono::steady_clock::now() + cfg_.watchdog;
  int fails = 0;
  for (;;) {
    if (ownership_acquire(p, remote) == AcquireOutcome::Acquired) {
      CommitOutcome oc;
      try {
        oc = engine_.execute(body, cfg_.policy.txn, stats_, gp, &rng);
      } catch (...) {
        ownership_release(p, remote);
        throw;
      }
      ownership_release(p, remote);
      if (oc.kind == OutcomeKind::NeedsRemote)
        throw ContractError(
            "run_distributed_txn: body touched an undeclared remote element");
      return oc;
    }
    stats_.ownership_backoffs.fetch_add(1, std::memory_order_relaxed);
    if (std::chrono::steady_clock::now() > deadline)
      throw WatchdogError("ownership acquisition starved");
    ownership_backoff(rng, fails++);
  }
}

}  // namespace aam
