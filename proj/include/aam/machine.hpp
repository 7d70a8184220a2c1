#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <variant>
#include <vector>

#include "aam/graph.hpp"
#include "aam/message.hpp"
#include "aam/txn.hpp"

namespace aam {

class Machine;

/// An operator plus its runtime hooks. The transactional body is the
/// operator proper; the rest wires it into the message machinery.
struct OperatorDef {
  MessageClass cls;

  /// Runs inside the activity's transaction. Must touch shared state only
  /// through the Txn handle.
  std::function<OperatorResult(Txn&, VertexId element, Word param)> body;

  /// Optional single-word lowering used by the atomics mechanism.
  /// Operators without one fall back to a global-lock critical section.
  std::function<OperatorResult(Machine&, ProcId, VertexId, Word)> atomic_body;

  /// Optional pre-transaction filter: true means the operator's effect is
  /// already in place and the message is dropped. FF classes only.
  std::function<bool(VertexId, Word)> skip_check;

  /// Runs at the executing process after the activity commits, once per
  /// operator.
  std::function<void(ProcId exec_pid, VertexId, Word, const OperatorResult&)>
      result_sink;

  /// FR only: runs at the spawner for every returned result.
  std::function<void(Machine&, ProcId spawner, const AtomicMessage&,
                     const OperatorResult&)>
      failure_handler;
};

/// One operator application waiting in a process's coarsening queue.
struct PendingOp {
  OperatorId op = 0;
  VertexId element = 0;
  Word param = 0;
  MessageClass cls;
  ProcId reply_to = kNoProc;
};

/// An ordered batch of at most M operator applications executed as one
/// transaction.
struct Activity {
  std::vector<PendingOp> ops;
};

struct ReplyItem {
  AtomicMessage msg;
  OperatorResult result;
};

/// A simulated process: owned vertex slice, incoming mailbox, coarsening
/// queue and per-destination coalescing buffers. Mailbox delivery is FIFO
/// per (source, destination) pair.
struct SimProcess {
  ProcId pid = 0;
  using MailItem =
      std::variant<std::vector<AtomicMessage>, std::vector<ReplyItem>>;
  std::mutex mb_mu;
  std::deque<MailItem> mailbox;
  std::mutex work_mu;  // guards queue and coalesce
  std::deque<PendingOp> queue;
  std::vector<std::vector<AtomicMessage>> coalesce;  // indexed by destination
};

/// Per-element ownership markers for the distributed-activity protocol.
/// Transitions are only bottom->pid (acquire) and pid->bottom (release).
class OwnershipTable {
 public:
  static constexpr std::int32_t kBottom = -1;

  OwnershipTable() = default;
  explicit OwnershipTable(size_t n);

  bool try_acquire(ProcId p, VertexId v);
  void release(ProcId p, VertexId v);
  std::int32_t marker(VertexId v) const {
    return markers_[v].load(std::memory_order_acquire);
  }
  size_t size() const { return n_; }

 private:
  size_t n_ = 0;
  std::unique_ptr<std::atomic<std::int32_t>[]> markers_;
};

enum class CoarsenOrder : std::uint8_t { Fifo, SortByElement };

struct MachineConfig {
  ProcId procs = 1;
  unsigned threads = 1;  // worker threads per process; 1 = deterministic
  std::uint32_t coarsen_M = 1;
  std::uint32_t coalesce_C = 1;
  CoarsenOrder order = CoarsenOrder::Fifo;
  ExecPolicy policy;
  std::uint64_t seed = 1;
  CostModel cost;
  std::chrono::milliseconds watchdog{20000};

  bool deterministic() const { return threads <= 1; }
};

enum class AcquireOutcome : std::uint8_t { Acquired, Backoff };

/// The simulated distributed-memory machine: N processes, message routing
/// with coalescing, activity coarsening and execution, and the ownership
/// protocol for transactions spanning processes.
class Machine {
 public:
  Machine(VertexId n_elements, MachineConfig cfg);
  ~Machine();

  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  TxnEngine& engine() { return engine_; }
  RunStats& stats() { return stats_; }
  const Partition& partition() const { return part_; }
  const MachineConfig& config() const { return cfg_; }

  /// Registers an operator; ids are stable for the run. Contract error
  /// once execution has started.
  OperatorId register_operator(OperatorDef def);

  /// Declares a cell array indexed by element id, enabling the ownership
  /// guard to map cells back to elements. Only needed when procs > 1.
  void register_cells(CellArray& arr);

  /// Routes a message: locally into the coarsening queue, remotely into
  /// the coalescing buffer (flushed at C messages).
  void spawn(ProcId src, const AtomicMessage& msg);

  /// Sends every non-empty coalescing buffer of src regardless of fill.
  void flush_all(ProcId src);

  /// Pops up to M queued operators in FIFO order into one Activity.
  Activity coarsen(SimProcess& proc);

  /// Drains queues, mailboxes and replies until globally quiescent (or
  /// cancelled). Returns the merged statistics so far.
  RunStats::Snapshot run_to_quiescence();

  /// Quiescence-bypassing cancellation; in-flight activities may still
  /// commit, undelivered work is dropped.
  void cancel() { cancelled_.store(true, std::memory_order_release); }
  bool cancelled() const { return cancelled_.load(std::memory_order_acquire); }

  // Ownership protocol ------------------------------------------------------

  /// CAS-marks the elements in ascending id order; on any failure releases
  /// everything acquired and reports Backoff.
  AcquireOutcome ownership_acquire(ProcId p, std::span<const VertexId> elems);
  void ownership_release(ProcId p, std::span<const VertexId> elems);
  const OwnershipTable& ownership() const { return owners_; }

  /// Acquire-execute-release loop for a transaction over local and remote
  /// elements; retries with randomized backoff until it commits.
  CommitOutcome run_distributed_txn(ProcId p, std::span<const VertexId> local,
                                    std::span<const VertexId> remote,
                                    const TxnEngine::Body& body);

  /// Thread-confined RNG derived from the machine seed.
  Rng& thread_rng();

  // Introspection used by tests.
  std::uint64_t pending() const { return pending_.load(); }
  std::uint64_t total_spawned() const { return spawned_.load(); }
  std::uint64_t total_consumed() const { return consumed_.load(); }
  SimProcess& process(ProcId p) { return *procs_[p]; }

 private:
  void seal();
  void execute_activity(ProcId p, Activity& act);
  void execute_htm(ProcId p, Activity& act, std::vector<OperatorResult>& out);
  void execute_atomics(ProcId p, Activity& act,
                       std::vector<OperatorResult>& out);
  void postprocess(ProcId p, const Activity& act,
                   const std::vector<OperatorResult>& results);
  void deliver_result(const ReplyItem& reply);
  void deliver_batch(ProcId dst, std::vector<AtomicMessage> batch);
  void handle_mail_item(ProcId p, SimProcess::MailItem item);
  bool worker_pass(ProcId p);  // one unit of work; false if idle
  void run_deterministic();
  void run_threaded();
  void ownership_backoff(Rng& rng, int consecutive_fails);
  AccessGuard make_guard(ProcId p);
  VertexId element_of(const Cell* c) const;

  MachineConfig cfg_;
  Partition part_;
  TxnEngine engine_;
  RunStats stats_;
  OwnershipTable owners_;
  std::vector<std::unique_ptr<SimProcess>> procs_;
  std::vector<OperatorDef> registry_;
  bool sealed_ = false;

  struct CellRange {
    const Cell* base;
    size_t n;
  };
  std::vector<CellRange> cell_ranges_;

  std::atomic<std::uint64_t> pending_{0};
  std::atomic<std::uint64_t> spawned_{0};
  std::atomic<std::uint64_t> consumed_{0};
  std::atomic<bool> cancelled_{false};
  std::atomic<std::uint32_t> rng_counter_{0};
  Rng driver_rng_;
};

}  // namespace aam
