#include "aam/txn.hpp"

#include <algorithm>
#include <thread>

namespace aam {

namespace {
// Lock tag used by non-transactional atomics while they mutate a cell.
constexpr std::uint64_t kAtomicLock = ~std::uint64_t{0};

thread_local Rng t_fallback_rng{0x9e3779b97f4a7c15ull ^
                                std::hash<std::thread::id>{}(
                                    std::this_thread::get_id())};
}  // namespace

RetryPolicy RetryPolicy::rtm() {
  RetryPolicy p;
  p.kind = Kind::RtmBackoff;
  p.capacity = kLongModeCapacity;
  return p;
}
RetryPolicy RetryPolicy::hle() {
  RetryPolicy p;
  p.kind = Kind::HleSerializeAfterFirst;
  p.capacity = kLongModeCapacity;
  return p;
}
RetryPolicy RetryPolicy::bgq_short() {
  RetryPolicy p;
  p.kind = Kind::BgqAutoRetry;
  p.capacity = kShortModeCapacity;
  return p;
}
RetryPolicy RetryPolicy::bgq_long() {
  RetryPolicy p;
  p.kind = Kind::BgqAutoRetry;
  p.capacity = kLongModeCapacity;
  return p;
}
RetryPolicy RetryPolicy::locks() {
  RetryPolicy p;
  p.kind = Kind::SerializeAlways;
  p.capacity = kLongModeCapacity;
  return p;
}

ExecPolicy ExecPolicy::parse(const std::string& spec) {
  ExecPolicy e;
  e.name = spec;
  if (spec == "rtm") {
    e.txn = RetryPolicy::rtm();
  } else if (spec == "hle") {
    e.txn = RetryPolicy::hle();
  } else if (spec == "bgq-short") {
    e.txn = RetryPolicy::bgq_short();
  } else if (spec == "bgq-long") {
    e.txn = RetryPolicy::bgq_long();
  } else if (spec == "locks") {
    e.txn = RetryPolicy::locks();
  } else if (spec == "atomics") {
    e.mech = Mech::Atomics;
    e.txn = RetryPolicy::locks();  // fallback for non-lowerable operators
  } else {
    throw ConfigError("unknown policy spec: " + spec);
  }
  return e;
}

bool TxnContext::in_footprint(Cell* c) const {
  return std::find(footprint.begin(), footprint.end(), c) != footprint.end();
}

Word Txn::read(Cell& c) { return eng_.read(ctx_, c); }
void Txn::write(Cell& c, Word v) { eng_.write(ctx_, c, v); }

// --- engine internals -------------------------------------------------------

void TxnEngine::begin(TxnContext& ctx, const RetryPolicy& policy,
                      bool serialized) {
  ctx.id = next_id_.fetch_add(1, std::memory_order_relaxed);
  ctx.capacity = policy.capacity;
  ctx.serialized = serialized;
  ctx.doomed.store(false, std::memory_order_relaxed);
  ctx.read_set.clear();
  ctx.write_list.clear();
  ctx.write_index.clear();
  ctx.footprint.clear();
  ctx.ops = 0;
  ctx.fault_at = UINT64_MAX;
  if (!serialized) {
    std::lock_guard<std::mutex> g(registry_mu_);
    live_.emplace(ctx.id, &ctx);
  }
}

void TxnEngine::finish(TxnContext& ctx) {
  if (!ctx.serialized) {
    std::lock_guard<std::mutex> g(registry_mu_);
    live_.erase(ctx.id);
  }
}

void TxnEngine::check_health(TxnContext& ctx, Cell* about_to_touch) {
  if (ctx.doomed.load(std::memory_order_acquire))
    throw TxnAbort{AbortReason::MemoryConflict};
  if (!ctx.serialized && serialization_active())
    throw TxnAbort{AbortReason::MemoryConflict};
  if (ctx.ops >= ctx.fault_at) throw TxnAbort{AbortReason::Other};
  if (about_to_touch && ctx.guard && !ctx.serialized) {
    auto d = ctx.guard->check(*about_to_touch);
    if (d.verdict == AccessGuard::Verdict::Conflict)
      throw TxnAbort{AbortReason::MemoryConflict};
    if (d.verdict == AccessGuard::Verdict::NeedsRemote)
      throw TxnAbort{AbortReason::MemoryConflict, d.element};
  }
}

void TxnEngine::track_footprint(TxnContext& ctx, Cell& c) {
  if (ctx.in_footprint(&c)) return;
  // Serialized execution keeps no speculative state, so it cannot overflow.
  if (!ctx.serialized && ctx.footprint.size() + 1 > ctx.capacity)
    throw TxnAbort{AbortReason::BufferOverflow};
  ctx.footprint.push_back(&c);
}

Word TxnEngine::read(TxnContext& ctx, Cell& c) {
  check_health(ctx, &c);
  ctx.ops++;
  if (auto it = ctx.write_index.find(&c); it != ctx.write_index.end())
    return ctx.write_list[it->second].second;

  std::uint64_t lock = c.lock_word.load(std::memory_order_acquire);
  if (lock != 0 && lock != ctx.id) {
    if (ctx.serialized) {
      // Speculative holders are doomed and will release their locks.
      while (lock != 0) {
        doom_holder(lock);
        if (!deterministic_) std::this_thread::yield();
        lock = c.lock_word.load(std::memory_order_acquire);
      }
    } else {
      throw TxnAbort{AbortReason::MemoryConflict};
    }
  }
  track_footprint(ctx, c);
  const std::uint64_t ver = c.version.load(std::memory_order_acquire);
  const Word val = c.value.load(std::memory_order_acquire);
  ctx.read_set.push_back({&c, ver});
  return val;
}

void TxnEngine::lock_for_write(TxnContext& ctx, Cell& c) {
  std::uint64_t expect = 0;
  if (c.lock_word.compare_exchange_strong(expect, ctx.id,
                                          std::memory_order_acq_rel)) {
    return;
  }
  if (ctx.serialized) {
    // Speculative holders are doomed and will release; spin until free.
    while (true) {
      doom_holder(expect);
      wait_cell_free(c);
      expect = 0;
      if (c.lock_word.compare_exchange_strong(expect, ctx.id,
                                              std::memory_order_acq_rel))
        return;
    }
  }
  throw TxnAbort{AbortReason::MemoryConflict};
}

void TxnEngine::write(TxnContext& ctx, Cell& c, Word v) {
  check_health(ctx, &c);
  ctx.ops++;
  if (auto it = ctx.write_index.find(&c); it != ctx.write_index.end()) {
    ctx.write_list[it->second].second = v;
    return;
  }
  track_footprint(ctx, c);
  lock_for_write(ctx, c);
  ctx.write_index.emplace(&c, ctx.write_list.size());
  ctx.write_list.emplace_back(&c, v);
}

void TxnEngine::validate_reads(TxnContext& ctx) {
  for (const auto& entry : ctx.read_set) {
    const std::uint64_t lock =
        entry.cell->lock_word.load(std::memory_order_acquire);
    if (lock != 0 && lock != ctx.id)
      throw TxnAbort{AbortReason::MemoryConflict};
    if (entry.cell->version.load(std::memory_order_acquire) != entry.version)
      throw TxnAbort{AbortReason::MemoryConflict};
  }
}

void TxnEngine::commit(TxnContext& ctx) {
  check_health(ctx, nullptr);
  if (ctx.fault_at != UINT64_MAX) throw TxnAbort{AbortReason::Other};
  validate_reads(ctx);
  for (auto& [cell, val] : ctx.write_list) {
    cell->value.store(val, std::memory_order_release);
    cell->version.fetch_add(1, std::memory_order_acq_rel);
  }
  for (auto& [cell, val] : ctx.write_list) {
    cell->lock_word.store(0, std::memory_order_release);
  }
  ctx.write_list.clear();
  ctx.write_index.clear();
}

void TxnEngine::rollback(TxnContext& ctx) {
  for (auto& [cell, val] : ctx.write_list) {
    cell->lock_word.store(0, std::memory_order_release);
  }
  ctx.write_list.clear();
  ctx.write_index.clear();
  ctx.read_set.clear();
  ctx.footprint.clear();
}

void TxnEngine::doom_holder(std::uint64_t holder_id) {
  if (holder_id == 0 || holder_id == kAtomicLock) return;
  std::lock_guard<std::mutex> g(registry_mu_);
  auto it = live_.find(holder_id);
  if (it == live_.end()) return;
  it->second->doomed.store(true, std::memory_order_release);
  if (deterministic_) {
    // Single-threaded mode: the holder cannot run concurrently, so its
    // locks must be torn down here or the caller would spin forever.
    rollback(*it->second);
  }
}

void TxnEngine::wait_cell_free(Cell& c) {
  while (c.lock_word.load(std::memory_order_acquire) != 0) {
    if (deterministic_)
      throw ContractError("deterministic mode: cell lock not released");
    std::this_thread::yield();
  }
}

void TxnEngine::backoff_sleep(int attempt, const RetryPolicy& policy,
                              Rng* rng) {
  if (policy.kind != RetryPolicy::Kind::RtmBackoff) return;
  if (deterministic_) return;
  Rng& r = rng ? *rng : t_fallback_rng;
  auto ns = policy.base_backoff.count();
  for (int i = 0; i < attempt && ns < policy.max_backoff.count(); ++i) ns *= 2;
  ns = std::min<long long>(ns, policy.max_backoff.count());
  // +-50% jitter
  ns = static_cast<long long>(static_cast<double>(ns) * (0.5 + r.canonical()));
  std::this_thread::sleep_for(std::chrono::nanoseconds(ns));
}

void TxnEngine::charge_attempt(RunStats& stats, const TxnContext& ctx,
                               bool serialized) const {
  if (!cost_.enabled) return;
  std::uint64_t ns = cost_.txn_fixed_ns +
                     cost_.txn_per_access_ns * ctx.footprint.size();
  if (serialized) ns += cost_.serialization_ns;
  stats.model_ns.fetch_add(ns, std::memory_order_relaxed);
}

CommitOutcome TxnEngine::execute(const Body& body, const RetryPolicy& policy,
                                 RunStats& stats, const AccessGuard* guard,
                                 Rng* rng) {
  const int serialize_after = policy.serialize_after();
  int aborts = 0;
  while (aborts < serialize_after) {
    // Do not start speculation while a serialized transaction runs.
    while (serialization_active()) {
      if (deterministic_) break;  // single thread: flag cannot be live
      std::this_thread::yield();
    }
    TxnContext ctx;
    begin(ctx, policy, /*serialized=*/false);
    ctx.guard = guard;
    if (policy.fault_rate > 0.0) {
      Rng& r = rng ? *rng : t_fallback_rng;
      if (r.canonical() < policy.fault_rate) ctx.fault_at = r.below(4);
    }
    try {
      Txn txn(*this, ctx);
      body(txn);
      commit(ctx);
      charge_attempt(stats, ctx, false);
      finish(ctx);
      stats.commits.fetch_add(1, std::memory_order_relaxed);
      return {OutcomeKind::Committed};
    } catch (const TxnAbort& a) {
      rollback(ctx);
      charge_attempt(stats, ctx, false);
      finish(ctx);
      switch (a.reason) {
        case AbortReason::MemoryConflict:
          stats.aborts_conflict.fetch_add(1, std::memory_order_relaxed);
          break;
        case AbortReason::BufferOverflow:
          stats.aborts_capacity.fetch_add(1, std::memory_order_relaxed);
          break;
        case AbortReason::Other:
          stats.aborts_other.fetch_add(1, std::memory_order_relaxed);
          break;
      }
      if (a.remote_element != kNoVertex) {
        // First touch of a remote element: hand control back to the
        // ownership protocol instead of retrying blindly.
        return {OutcomeKind::NeedsRemote, a.remote_element};
      }
      ++aborts;
      backoff_sleep(aborts, policy, rng);
    } catch (...) {
      // Non-transactional fault in the body: roll back, then propagate.
      rollback(ctx);
      finish(ctx);
      throw;
    }
  }

  // Global-lock fallback; always succeeds.
  std::lock_guard<std::mutex> g(serial_mu_);
  serial_active_.store(true, std::memory_order_release);
  if (deterministic_) {
    // Tear down any cooperative peers still holding locks.
    std::lock_guard<std::mutex> rg(registry_mu_);
    for (auto& [id, peer] : live_) {
      peer->doomed.store(true, std::memory_order_release);
      rollback(*peer);
    }
  }
  TxnContext ctx;
  begin(ctx, policy, /*serialized=*/true);
  try {
    Txn txn(*this, ctx);
    body(txn);
    commit(ctx);
  } catch (const TxnAbort&) {
    rollback(ctx);
    serial_active_.store(false, std::memory_order_release);
    throw ContractError("serialized transaction aborted");
  } catch (...) {
    rollback(ctx);
    serial_active_.store(false, std::memory_order_release);
    throw;
  }
  charge_attempt(stats, ctx, true);
  serial_active_.store(false, std::memory_order_release);
  stats.serializations.fetch_add(1, std::memory_order_relaxed);
  return {OutcomeKind::SerializedCommit};
}

// --- atomics ----------------------------------------------------------------

namespace {
Word apply_acc(Word cur, Word arg, AccOp op) {
  switch (op) {
    case AccOp::U64Sum: return cur + arg;
    case AccOp::U64Min: return std::min(cur, arg);
    case AccOp::U64Max: return std::max(cur, arg);
    case AccOp::F64Sum:
      return f64_to_word(word_to_f64(cur) + word_to_f64(arg));
  }
  return cur;
}
}  // namespace

// Acquires the cell's lock word for a non-transactional atomic. Live
// speculative holders are doomed (the transaction aborts, not the atomic).
void TxnEngine::atomic_lock_cell(Cell& c) {
  std::uint64_t expect = 0;
  while (!c.lock_word.compare_exchange_weak(expect, kAtomicLock,
                                            std::memory_order_acq_rel)) {
    if (expect != 0 && expect != kAtomicLock) doom_holder(expect);
    if (!deterministic_) std::this_thread::yield();
    expect = 0;
  }
}

bool TxnEngine::atomic_cas(Cell& c, Word expect, Word desired, RunStats* st) {
  atomic_lock_cell(c);
  const Word cur = c.value.load(std::memory_order_acquire);
  bool ok = cur == expect;
  if (ok) {
    c.value.store(desired, std::memory_order_release);
    c.version.fetch_add(1, std::memory_order_acq_rel);
  }
  c.lock_word.store(0, std::memory_order_release);
  if (st && cost_.enabled)
    st->model_ns.fetch_add(cost_.atomic_fixed_ns + cost_.atomic_op_ns,
                           std::memory_order_relaxed);
  return ok;
}

void TxnEngine::atomic_acc(Cell& c, Word arg, AccOp op, RunStats* st) {
  (void)atomic_fao(c, arg, op, st);
}

Word TxnEngine::atomic_fao(Cell& c, Word arg, AccOp op, RunStats* st) {
  atomic_lock_cell(c);
  const Word prev = c.value.load(std::memory_order_acquire);
  c.value.store(apply_acc(prev, arg, op), std::memory_order_release);
  c.version.fetch_add(1, std::memory_order_acq_rel);
  c.lock_word.store(0, std::memory_order_release);
  if (st && cost_.enabled)
    st->model_ns.fetch_add(cost_.atomic_fixed_ns + cost_.atomic_op_ns,
                           std::memory_order_relaxed);
  return prev;
}

void TxnEngine::run_critical(const Body& body, RunStats& stats) {
  (void)execute(body, RetryPolicy::locks(), stats);
}

}  // namespace aam
