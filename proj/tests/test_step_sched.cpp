#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "aam/step_sched.hpp"

using namespace aam;

namespace {

// All final states reachable by some sequential order of the transactions.
std::set<std::vector<Word>> sequential_states(
    const std::vector<StepTxnSpec>& txns, const std::vector<Word>& initial) {
  std::vector<size_t> order(txns.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::set<std::vector<Word>> states;
  std::sort(order.begin(), order.end());
  do {
    states.insert(step_sequential_result(txns, order, initial));
  } while (std::next_permutation(order.begin(), order.end()));
  return states;
}

std::vector<Word> cell_values(const CellArray& cells) {
  std::vector<Word> v(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) v[i] = cells[i].peek();
  return v;
}

// Increment of one cell: read it, write read+1.
StepTxnSpec increment(size_t cell) {
  return {{StepOp::read(cell), StepOp::write_from_read(cell, 0, 1)}};
}

}  // namespace

TEST_CASE("sequential oracle applies program order") {
  std::vector<StepTxnSpec> txns{increment(0), increment(0)};
  const auto out = step_sequential_result(txns, std::vector<size_t>{0, 1},
                                          std::vector<Word>{5});
  CHECK(out == std::vector<Word>{7});
}

TEST_CASE("every interleaving of two conflicting increments serializes") {
  std::vector<StepTxnSpec> txns{increment(0), increment(0)};
  const auto expected = sequential_states(txns, {0});
  std::vector<size_t> lengths{2, 2};
  size_t schedules = 0;
  for_each_interleaving(lengths, [&](std::span<const int> pattern) {
    TxnEngine eng;
    CellArray cells(1);
    RunStats st;
    StepScheduler sched(eng, cells, txns, RetryPolicy::rtm(), st);
    sched.run(pattern);
    CHECK(expected.count(cell_values(cells)) == 1);
    CHECK(st.commits.load() + st.serializations.load() == 2);
    ++schedules;
  });
  CHECK(schedules == 6);  // C(4,2)
}

TEST_CASE("interleavings of read-write transfers stay serializable") {
  // t0: c1 = c0 + 10;  t1: c0 = c1 + 100;  t2: c0 += 1
  std::vector<StepTxnSpec> txns{
      {{StepOp::read(0), StepOp::write_from_read(1, 0, 10)}},
      {{StepOp::read(1), StepOp::write_from_read(0, 0, 100)}},
      increment(0)};
  const std::vector<Word> initial{1, 2, 0};
  const auto expected = sequential_states(txns, initial);

  std::vector<size_t> lengths{2, 2, 2};
  size_t checked = 0;
  for_each_interleaving(lengths, [&](std::span<const int> pattern) {
    TxnEngine eng;
    CellArray cells(3);
    for (size_t i = 0; i < initial.size(); ++i)
      cells[i].unsafe_store(initial[i]);
    RunStats st;
    StepScheduler sched(eng, cells, txns, RetryPolicy::hle(), st);
    sched.run(pattern);
    CHECK(expected.count(cell_values(cells)) == 1);
    ++checked;
  });
  CHECK(checked == 90);  // 6!/(2!2!2!)
}

TEST_CASE("rollbacks leave only committed effects visible") {
  // Shadow state replays each transaction's sequential semantics at commit
  // time; after every abort the cells must hold exactly the shadow values.
  std::vector<StepTxnSpec> txns{increment(0), increment(0), increment(1)};
  std::vector<size_t> lengths{2, 2, 2};
  for_each_interleaving(lengths, [&](std::span<const int> pattern) {
    TxnEngine eng;
    CellArray cells(2);
    RunStats st;
    StepScheduler sched(eng, cells, txns, RetryPolicy::rtm(), st);
    std::vector<Word> shadow{0, 0};
    sched.on_commit = [&](size_t i) {
      shadow = step_sequential_result(txns, std::vector<size_t>{i}, shadow);
    };
    sched.on_abort = [&] { CHECK(cell_values(cells) == shadow); };
    sched.run(pattern);
    CHECK(cell_values(cells) == shadow);
  });
}

TEST_CASE("schedules replay bit-identically") {
  std::vector<StepTxnSpec> txns{increment(0), increment(0), increment(0)};
  auto run_once = [&](std::uint64_t seed) {
    TxnEngine eng;
    CellArray cells(1);
    RunStats st;
    StepScheduler sched(eng, cells, txns, RetryPolicy::rtm(), st, seed);
    sched.run_seeded();
    const auto s = st.snapshot();
    return std::tuple{cell_values(cells), s.commits, s.aborts_conflict,
                      s.serializations};
  };
  for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
    CHECK(run_once(seed) == run_once(seed));
  }
}

TEST_CASE("policy thresholds apply inside the scheduler") {
  // Forced faults: every speculative attempt aborts, so each transaction
  // serializes after its policy's threshold.
  std::vector<StepTxnSpec> txns{increment(0)};
  auto run_policy = [&](RetryPolicy p) {
    p.fault_rate = 1.0;
    TxnEngine eng;
    CellArray cells(1);
    RunStats st;
    StepScheduler sched(eng, cells, txns, p, st, 3);
    sched.run_seeded();
    CHECK(cells[0].peek() == 1);
    return st.snapshot();
  };
  const auto hle = run_policy(RetryPolicy::hle());
  CHECK(hle.total_aborts() == 1);
  CHECK(hle.serializations == 1);
  const auto bgq = run_policy(RetryPolicy::bgq_short());
  CHECK(bgq.total_aborts() == 10);
  CHECK(bgq.serializations == 1);
}

TEST_CASE("serialization aborts live speculative peers") {
  // t0 must serialize (forced faults); t1 is mid-flight when it does.
  std::vector<StepTxnSpec> txns{increment(0), increment(1)};
  RetryPolicy p = RetryPolicy::hle();
  p.fault_rate = 1.0;  // applies to every speculative attempt of both
  TxnEngine eng;
  CellArray cells(2);
  RunStats st;
  StepScheduler sched(eng, cells, txns, p, st, 5);
  sched.run_seeded();
  CHECK(cells[0].peek() == 1);
  CHECK(cells[1].peek() == 1);
  CHECK(st.serializations.load() == 2);
}
