#pragma once

#include <functional>
#include <span>
#include <vector>

#include "aam/txn.hpp"

namespace aam {

/// One primitive step of a scripted transaction. A write's value is either
/// a constant or derived from an earlier read of the same attempt, so
/// scripted transactions have deterministic sequential semantics.
struct StepOp {
  enum class Kind : std::uint8_t { Read, Write };
  struct Value {
    bool from_read = false;
    size_t read_index = 0;  // index into this attempt's reads so far
    Word add = 0;           // value = reads[read_index] + add (or just add)
  };
  Kind kind = Kind::Read;
  size_t cell = 0;
  Value value;

  static StepOp read(size_t cell) { return {Kind::Read, cell, {}}; }
  static StepOp write_const(size_t cell, Word v) {
    return {Kind::Write, cell, {false, 0, v}};
  }
  static StepOp write_from_read(size_t cell, size_t read_index, Word add) {
    return {Kind::Write, cell, {true, read_index, add}};
  }
};

struct StepTxnSpec {
  std::vector<StepOp> ops;
};

/// Applies the scripted transactions sequentially in the given order.
/// This is the independent oracle for serializability checks.
std::vector<Word> step_sequential_result(std::span<const StepTxnSpec> txns,
                                         std::span<const size_t> order,
                                         std::vector<Word> initial);

/// Cooperative single-threaded scheduler that interleaves scripted
/// transactions step by step against the engine. Schedules are either an
/// explicit pattern of transaction indices or seeded random choices; both
/// replay bit-identically. Retries and the serialization fallback follow
/// the retry policy.
class StepScheduler {
 public:
  StepScheduler(TxnEngine& eng, CellArray& cells,
                std::vector<StepTxnSpec> txns, RetryPolicy policy,
                RunStats& stats, std::uint64_t seed = 0);
  ~StepScheduler();

  StepScheduler(const StepScheduler&) = delete;
  StepScheduler& operator=(const StepScheduler&) = delete;

  /// Consumes the pattern one slot at a time (slots addressing finished
  /// transactions are skipped), then finishes remaining work round-robin.
  void run(std::span<const int> pattern);

  /// Picks the next transaction uniformly among the unfinished ones.
  void run_seeded();

  /// Invoked right after every abort, with all rollbacks applied; tests
  /// use it to assert pristine state.
  std::function<void()> on_abort;

  /// Invoked with the transaction index right after it commits.
  std::function<void(size_t)> on_commit;

  std::uint64_t serializations() const { return serializations_; }

 private:
  struct Task {
    TxnContext ctx;
    size_t pc = 0;
    int aborts = 0;
    bool started = false;
    bool done = false;
    std::vector<Word> reads;
  };

  bool all_done() const;
  void step(size_t i);
  void run_serialized(size_t i);
  void abort_task(Task& t, AbortReason reason);

  TxnEngine& eng_;
  CellArray& cells_;
  std::vector<StepTxnSpec> specs_;
  RetryPolicy policy_;
  RunStats& stats_;
  Rng rng_;
  std::vector<Task> tasks_;
  std::uint64_t serializations_ = 0;
};

/// Invokes fn with every distinct interleaving of `lengths[i]` slots for
/// transaction i (multiset permutations, lexicographic order).
void for_each_interleaving(std::span<const size_t> lengths,
                           const std::function<void(std::span<const int>)>& fn);

}  // namespace aam
