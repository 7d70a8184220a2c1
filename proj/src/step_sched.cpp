#include "aam/step_sched.hpp"

#include <algorithm>

namespace aam {

namespace {
Word eval_value(const StepOp::Value& v, const std::vector<Word>& reads) {
  if (!v.from_read) return v.add;
  if (v.read_index >= reads.size())
    throw ContractError("step txn: write refers to a missing read");
  return reads[v.read_index] + v.add;
}
}  // namespace

std::vector<Word> step_sequential_result(std::span<const StepTxnSpec> txns,
                                         std::span<const size_t> order,
                                         std::vector<Word> state) {
  for (size_t idx : order) {
    const StepTxnSpec& spec = txns[idx];
    std::vector<Word> reads;
    for (const StepOp& op : spec.ops) {
      if (op.kind == StepOp::Kind::Read) {
        reads.push_back(state[op.cell]);
      } else {
        state[op.cell] = eval_value(op.value, reads);
      }
    }
  }
  return state;
}

StepScheduler::StepScheduler(TxnEngine& eng, CellArray& cells,
                             std::vector<StepTxnSpec> txns, RetryPolicy policy,
                             RunStats& stats, std::uint64_t seed)
    : eng_(eng),
      cells_(cells),
      specs_(std::move(txns)),
      policy_(policy),
      stats_(stats),
      rng_(seed),
      tasks_(specs_.size()) {
  eng_.set_deterministic(true);
}

StepScheduler::~StepScheduler() {
  // Never leave half-open contexts behind.
  for (Task& t : tasks_) {
    if (t.started && !t.done) {
      eng_.rollback(t.ctx);
      eng_.finish(t.ctx);
    }
  }
}

bool StepScheduler::all_done() const {
  return std::all_of(tasks_.begin(), tasks_.end(),
                     [](const Task& t) { return t.done; });
}

void StepScheduler::abort_task(Task& t, AbortReason reason) {
  eng_.rollback(t.ctx);
  eng_.finish(t.ctx);
  switch (reason) {
    case AbortReason::MemoryConflict: stats_.aborts_conflict++; break;
    case AbortReason::BufferOverflow: stats_.aborts_capacity++; break;
    case AbortReason::Other: stats_.aborts_other++; break;
  }
  t.started = false;
  t.pc = 0;
  t.reads.clear();
  ++t.aborts;
  if (on_abort) on_abort();
}

void StepScheduler::run_serialized(size_t i) {
  Task& t = tasks_[i];
  // Taking the fallback lock forces every live speculative peer to abort.
  for (size_t j = 0; j < tasks_.size(); ++j) {
    if (j == i) continue;
    Task& peer = tasks_[j];
    if (peer.started && !peer.done) abort_task(peer, AbortReason::MemoryConflict);
  }
  eng_.begin(t.ctx, policy_, /*serialized=*/true);
  std::vector<Word> reads;
  for (const StepOp& op : specs_[i].ops) {
    if (op.kind == StepOp::Kind::Read) {
      reads.push_back(eng_.read(t.ctx, cells_[op.cell]));
    } else {
      eng_.write(t.ctx, cells_[op.cell], eval_value(op.value, reads));
    }
  }
  eng_.commit(t.ctx);
  eng_.finish(t.ctx);
  stats_.serializations++;
  ++serializations_;
  t.done = true;
  if (on_commit) on_commit(i);
}

void StepScheduler::step(size_t i) {
  Task& t = tasks_[i];
  if (t.done) return;
  if (t.aborts >= policy_.serialize_after()) {
    run_serialized(i);
    return;
  }
  if (!t.started) {
    eng_.begin(t.ctx, policy_, /*serialized=*/false);
    if (policy_.fault_rate > 0.0 && rng_.canonical() < policy_.fault_rate) {
      t.ctx.fault_at = rng_.below(2);
    }
    t.started = true;
    t.pc = 0;
    t.reads.clear();
  }
  const StepOp& op = specs_[i].ops[t.pc];
  try {
    if (op.kind == StepOp::Kind::Read) {
      t.reads.push_back(eng_.read(t.ctx, cells_[op.cell]));
    } else {
      eng_.write(t.ctx, cells_[op.cell], eval_value(op.value, t.reads));
    }
    ++t.pc;
    if (t.pc == specs_[i].ops.size()) {
      eng_.commit(t.ctx);
      eng_.finish(t.ctx);
      stats_.commits++;
      t.done = true;
      if (on_commit) on_commit(i);
    }
  } catch (const TxnAbort& a) {
    abort_task(t, a.reason);
  }
}

void StepScheduler::run(std::span<const int> pattern) {
  for (int idx : pattern) {
    if (idx < 0 || static_cast<size_t>(idx) >= tasks_.size())
      throw ContractError("schedule pattern index out of range");
    step(static_cast<size_t>(idx));
  }
  // Finish any remaining work deterministically.
  while (!all_done()) {
    for (size_t i = 0; i < tasks_.size(); ++i) {
      if (!tasks_[i].done) step(i);
    }
  }
}

void StepScheduler::run_seeded() {
  while (!all_done()) {
    std::vector<size_t> open;
    for (size_t i = 0; i < tasks_.size(); ++i) {
      if (!tasks_[i].done) open.push_back(i);
    }
    step(open[rng_.below(open.size())]);
  }
}

void for_each_interleaving(
    std::span<const size_t> lengths,
    const std::function<void(std::span<const int>)>& fn) {
  std::vector<int> pattern;
  for (size_t i = 0; i < lengths.size(); ++i) {
    pattern.insert(pattern.end(), lengths[i], static_cast<int>(i));
  }
  std::sort(pattern.begin(), pattern.end());
  do {
    fn(pattern);
  } while (std::next_permutation(pattern.begin(), pattern.end()));
}

}  // namespace aam
