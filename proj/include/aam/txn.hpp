#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "aam/common.hpp"

namespace aam {

/// Versioned transactional word. The lock word holds the owning transaction
/// id while a writer has it eagerly locked, 0 when free.
struct Cell {
  std::atomic<Word> value{0};
  std::atomic<std::uint64_t> version{0};
  std::atomic<std::uint64_t> lock_word{0};

  // Plain load of committed state. Safe outside transactions (barrier
  // phases, oracles); a racing speculative writer has not applied yet.
  Word peek() const { return value.load(std::memory_order_acquire); }

  // Direct store for quiescent barrier phases (no live transactions).
  void unsafe_store(Word w) {
    value.store(w, std::memory_order_release);
    version.fetch_add(1, std::memory_order_acq_rel);
  }
};

/// Fixed-size array of cells (Cell is not movable).
class CellArray {
 public:
  CellArray() = default;
  explicit CellArray(size_t n) : n_(n), cells_(std::make_unique<Cell[]>(n)) {}
  Cell& operator[](size_t i) { return cells_[i]; }
  const Cell& operator[](size_t i) const { return cells_[i]; }
  size_t size() const { return n_; }

 private:
  size_t n_ = 0;
  std::unique_ptr<Cell[]> cells_;
};

enum class AbortReason : std::uint8_t {
  MemoryConflict = 0,
  BufferOverflow = 1,
  Other = 2,
};

/// Counters for one run. Total aborts partition exactly into the three
/// reasons; commits count speculative commits, serializations count
/// global-lock fallbacks.
struct RunStats {
  std::atomic<std::uint64_t> commits{0};
  std::atomic<std::uint64_t> aborts_conflict{0};
  std::atomic<std::uint64_t> aborts_capacity{0};
  std::atomic<std::uint64_t> aborts_other{0};
  std::atomic<std::uint64_t> serializations{0};
  std::atomic<std::uint64_t> operator_failures{0};
  std::atomic<std::uint64_t> operators_executed{0};
  std::atomic<std::uint64_t> operators_skipped{0};
  std::atomic<std::uint64_t> ownership_backoffs{0};
  std::atomic<std::uint64_t> messages_sent{0};
  std::atomic<std::uint64_t> batches_sent{0};
  std::atomic<std::uint64_t> model_ns{0};

  std::uint64_t total_aborts() const {
    return aborts_conflict.load() + aborts_capacity.load() +
           aborts_other.load();
  }

  struct Snapshot {
    std::uint64_t commits, aborts_conflict, aborts_capacity, aborts_other,
        serializations, operator_failures, operators_executed,
        operators_skipped, ownership_backoffs, messages_sent, batches_sent,
        model_ns;
    std::uint64_t total_aborts() const {
      return aborts_conflict + aborts_capacity + aborts_other;
    }
  };
  Snapshot snapshot() const {
    return {commits.load(),           aborts_conflict.load(),
            aborts_capacity.load(),   aborts_other.load(),
            serializations.load(),    operator_failures.load(),
            operators_executed.load(), operators_skipped.load(),
            ownership_backoffs.load(), messages_sent.load(),
            batches_sent.load(),      model_ns.load()};
  }
  void reset() {
    commits = 0;
    aborts_conflict = aborts_capacity = aborts_other = 0;
    serializations = 0;
    operator_failures = operators_executed = operators_skipped = 0;
    ownership_backoffs = messages_sent = batches_sent = 0;
    model_ns = 0;
  }
};

inline constexpr size_t kShortModeCapacity = 64;
inline constexpr size_t kLongModeCapacity = 1024;

/// Vendor-style retry/serialization behavior plus the speculative-state
/// capacity. RtmBackoff retries with exponential backoff then serializes;
/// HLE serializes after the first abort; BG/Q auto-retries max_rollbacks
/// times (default 10) then serializes; SerializeAlways is the global-lock
/// baseline.
struct RetryPolicy {
  enum class Kind : std::uint8_t {
    RtmBackoff,
    HleSerializeAfterFirst,
    BgqAutoRetry,
    SerializeAlways,
  };
  Kind kind = Kind::RtmBackoff;
  int max_retries = 8;  // rtm retry bound; bgq uses max_rollbacks
  int max_rollbacks = 10;
  std::chrono::nanoseconds base_backoff{1000};  // 1 us
  std::chrono::nanoseconds max_backoff{1000000};  // 1 ms cap
  size_t capacity = kLongModeCapacity;
  double fault_rate = 0.0;  // "other reasons" injection, per attempt

  // Number of aborts after which execution falls back to the global lock.
  int serialize_after() const {
    switch (kind) {
      case Kind::RtmBackoff: return max_retries;
      case Kind::HleSerializeAfterFirst: return 1;
      case Kind::BgqAutoRetry: return max_rollbacks;
      case Kind::SerializeAlways: return 0;
    }
    return 0;
  }

  static RetryPolicy rtm();
  static RetryPolicy hle();
  static RetryPolicy bgq_short();
  static RetryPolicy bgq_long();
  static RetryPolicy locks();
};

/// How activities execute: as transactions or lowered to atomics.
struct ExecPolicy {
  enum class Mech : std::uint8_t { Htm, Atomics };
  Mech mech = Mech::Htm;
  RetryPolicy txn;
  std::string name = "rtm";

  /// Accepts rtm | hle | bgq-short | bgq-long | atomics | locks.
  static ExecPolicy parse(const std::string& spec);
};

/// Synthetic cost model: deterministic "model time" accounting that stands
/// in for hardware timing in model-structure experiments.
struct CostModel {
  bool enabled = false;
  std::uint64_t txn_fixed_ns = 120;      // begin+commit overhead
  std::uint64_t txn_per_access_ns = 2;   // per distinct cell touched
  std::uint64_t serialization_ns = 400;  // extra fallback penalty
  std::uint64_t atomic_fixed_ns = 0;
  std::uint64_t atomic_op_ns = 10;
  std::uint64_t msg_fixed_ns = 500;      // per network batch
  std::uint64_t msg_per_element_ns = 20; // per message within a batch
};

class TxnEngine;
struct TxnContext;

enum class OutcomeKind : std::uint8_t {
  Committed,
  SerializedCommit,
  NeedsRemote,  // internal: aborted on first touch of a remote element
};

struct CommitOutcome {
  OutcomeKind kind = OutcomeKind::Committed;
  VertexId remote_element = kNoVertex;  // valid iff NeedsRemote
  bool serialized() const { return kind == OutcomeKind::SerializedCommit; }
};

/// Access-control hook installed by the distributed runtime: decides
/// whether a speculative transaction may touch a cell.
struct AccessGuard {
  enum class Verdict : std::uint8_t { Ok, Conflict, NeedsRemote };
  struct Decision {
    Verdict verdict = Verdict::Ok;
    VertexId element = kNoVertex;
  };
  std::function<Decision(const Cell&)> check;
};

// Thrown inside transaction bodies to unwind to the retry loop. Not part of
// the public error surface.
struct TxnAbort {
  AbortReason reason;
  VertexId remote_element = kNoVertex;
};

struct TxnContext {
  std::uint64_t id = 0;
  size_t capacity = kLongModeCapacity;
  bool serialized = false;
  std::atomic<bool> doomed{false};

  struct ReadEntry {
    Cell* cell;
    std::uint64_t version;
  };
  std::vector<ReadEntry> read_set;
  std::vector<std::pair<Cell*, Word>> write_list;  // program order
  std::unordered_map<Cell*, size_t> write_index;
  std::vector<Cell*> footprint;  // distinct cells touched, insertion order
  const AccessGuard* guard = nullptr;
  std::uint64_t ops = 0;
  std::uint64_t fault_at = UINT64_MAX;  // injected "other" abort point

  bool in_footprint(Cell* c) const;
};

/// Transaction handle passed to bodies; all shared-state access goes
/// through it.
class Txn {
 public:
  Txn(TxnEngine& eng, TxnContext& ctx) : eng_(eng), ctx_(ctx) {}
  Word read(Cell& c);
  void write(Cell& c, Word v);
  double read_f64(Cell& c) { return word_to_f64(read(c)); }
  void write_f64(Cell& c, double d) { write(c, f64_to_word(d)); }
  void add_f64(Cell& c, double d) { write_f64(c, read_f64(c) + d); }
  bool serialized() const { return ctx_.serialized; }
  TxnContext& context() { return ctx_; }

 private:
  TxnEngine& eng_;
  TxnContext& ctx_;
};

enum class AccOp : std::uint8_t { U64Sum, U64Min, U64Max, F64Sum };

/// Software-emulated transactional memory over versioned cells: eager
/// write locking, read-version validation at commit, global-lock
/// serialization fallback. One engine per simulated machine.
class TxnEngine {
 public:
  TxnEngine() = default;
  TxnEngine(const TxnEngine&) = delete;
  TxnEngine& operator=(const TxnEngine&) = delete;

  // In deterministic mode backoff never sleeps and cross-context conflicts
  // are resolved synchronously (single-threaded cooperative execution).
  void set_deterministic(bool on) { deterministic_ = on; }
  bool deterministic() const { return deterministic_; }
  void set_cost_model(const CostModel& m) { cost_ = m; }
  const CostModel& cost_model() const { return cost_; }

  using Body = std::function<void(Txn&)>;

  /// Runs body as one transaction under the policy: speculative attempts,
  /// then the global-lock fallback. Stats are updated for every attempt.
  /// A guard may redirect remote accesses; the NeedsRemote outcome returns
  /// control to the caller without retrying.
  CommitOutcome execute(const Body& body, const RetryPolicy& policy,
                        RunStats& stats, const AccessGuard* guard = nullptr,
                        Rng* rng = nullptr);

  // Primitive steps for externally driven transactions (step scheduler).
  void begin(TxnContext& ctx, const RetryPolicy& policy, bool serialized);
  Word read(TxnContext& ctx, Cell& c);
  void write(TxnContext& ctx, Cell& c, Word v);
  void commit(TxnContext& ctx);
  void rollback(TxnContext& ctx);
  void finish(TxnContext& ctx);  // unregister after commit or rollback

  // Linearizable single-word atomics, outside any transaction. A live
  // speculative transaction holding the cell is aborted, not the atomic.
  bool atomic_cas(Cell& c, Word expect, Word desired, RunStats* st = nullptr);
  void atomic_acc(Cell& c, Word arg, AccOp op, RunStats* st = nullptr);
  Word atomic_fao(Cell& c, Word arg, AccOp op, RunStats* st = nullptr);

  // Runs body once under the global fallback lock (used by the atomics
  // mechanism for operators that have no single-word lowering).
  void run_critical(const Body& body, RunStats& stats);

  bool serialization_active() const {
    return serial_active_.load(std::memory_order_acquire);
  }

  void charge_model_ns(RunStats& stats, std::uint64_t ns) const {
    if (cost_.enabled) stats.model_ns.fetch_add(ns, std::memory_order_relaxed);
  }
  void charge_batch(RunStats& stats, size_t elements) const {
    if (cost_.enabled)
      stats.model_ns.fetch_add(
          cost_.msg_fixed_ns + cost_.msg_per_element_ns * elements,
          std::memory_order_relaxed);
  }

 private:
  friend class Txn;

  void lock_for_write(TxnContext& ctx, Cell& c);
  void atomic_lock_cell(Cell& c);
  void track_footprint(TxnContext& ctx, Cell& c);
  void check_health(TxnContext& ctx, Cell* about_to_touch);
  void validate_reads(TxnContext& ctx);
  void doom_holder(std::uint64_t holder_id);
  void wait_cell_free(Cell& c);
  void backoff_sleep(int attempt, const RetryPolicy& policy, Rng* rng);
  void charge_attempt(RunStats& stats, const TxnContext& ctx,
                      bool serialized) const;

  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<bool> serial_active_{false};
  std::mutex serial_mu_;

  // Live speculative contexts, for dooming by atomics and serialized txns.
  std::mutex registry_mu_;
  std::unordered_map<std::uint64_t, TxnContext*> live_;

  bool deterministic_ = false;
  CostModel cost_;
};

}  // namespace aam
