#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "aam/txn.hpp"

using namespace aam;

TEST_CASE("atomic_cas follows its definition") {
  TxnEngine eng;
  CellArray c(1);
  c[0].unsafe_store(5);
  CHECK(eng.atomic_cas(c[0], 5, 7));
  CHECK(c[0].peek() == 7);
  CHECK_FALSE(eng.atomic_cas(c[0], 6, 9));
  CHECK(c[0].peek() == 7);
}

TEST_CASE("concurrent cas marking has exactly one winner") {
  TxnEngine eng;
  CellArray c(1);
  std::atomic<int> wins{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t) {
    ts.emplace_back([&, t] {
      if (eng.atomic_cas(c[0], 0, t + 1)) wins++;
    });
  }
  for (auto& t : ts) t.join();
  CHECK(wins.load() == 1);
  CHECK(c[0].peek() != 0);
}

TEST_CASE("atomic_acc sums, mins and maxes") {
  TxnEngine eng;
  CellArray c(1);
  std::vector<std::thread> ts;
  for (int t = 0; t < 10; ++t) {
    ts.emplace_back([&] {
      for (int i = 0; i < 10; ++i) eng.atomic_acc(c[0], 1, AccOp::U64Sum);
    });
  }
  for (auto& t : ts) t.join();
  CHECK(c[0].peek() == 100);

  c[0].unsafe_store(5);
  eng.atomic_acc(c[0], 3, AccOp::U64Min);
  CHECK(c[0].peek() == 3);
  c[0].unsafe_store(5);
  eng.atomic_acc(c[0], 7, AccOp::U64Min);
  CHECK(c[0].peek() == 5);

  // mixed concurrent sums of 1..k
  c[0].unsafe_store(0);
  ts.clear();
  const Word k = 64;
  for (Word t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      for (Word v = t + 1; v <= k; v += 4) eng.atomic_acc(c[0], v, AccOp::U64Sum);
    });
  }
  for (auto& t : ts) t.join();
  CHECK(c[0].peek() == k * (k + 1) / 2);
}

TEST_CASE("atomic_fao returns the pre-image") {
  TxnEngine eng;
  CellArray c(1);
  c[0].unsafe_store(4);
  CHECK(eng.atomic_fao(c[0], 3, AccOp::U64Sum) == 4);
  CHECK(c[0].peek() == 7);

  c[0].unsafe_store(9);
  CHECK(eng.atomic_fao(c[0], 2, AccOp::U64Max) == 9);
  CHECK(c[0].peek() == 9);

  c[0].unsafe_store(0);
  std::vector<Word> prev(2);
  std::thread a([&] { prev[0] = eng.atomic_fao(c[0], 1, AccOp::U64Sum); });
  std::thread b([&] { prev[1] = eng.atomic_fao(c[0], 1, AccOp::U64Sum); });
  a.join();
  b.join();
  CHECK(std::min(prev[0], prev[1]) == 0);
  CHECK(std::max(prev[0], prev[1]) == 1);
  CHECK(c[0].peek() == 2);
}

TEST_CASE("uncontended transaction commits without aborts") {
  TxnEngine eng;
  CellArray c(1);
  RunStats st;
  const auto oc = eng.execute([&](Txn& t) { t.write(c[0], 11); },
                              RetryPolicy::rtm(), st);
  CHECK(oc.kind == OutcomeKind::Committed);
  CHECK(c[0].peek() == 11);
  CHECK(st.commits.load() == 1);
  CHECK(st.total_aborts() == 0);
}

TEST_CASE("concurrent increments preserve atomicity") {
  TxnEngine eng;
  CellArray c(1);
  RunStats st;
  std::thread a([&] {
    eng.execute([&](Txn& t) { t.write(c[0], t.read(c[0]) + 1); },
                RetryPolicy::rtm(), st);
  });
  std::thread b([&] {
    eng.execute([&](Txn& t) { t.write(c[0], t.read(c[0]) + 1); },
                RetryPolicy::rtm(), st);
  });
  a.join();
  b.join();
  CHECK(c[0].peek() == 2);
  CHECK(st.commits.load() + st.serializations.load() == 2);
}

TEST_CASE("capacity overflow aborts and then serializes") {
  TxnEngine eng;
  CellArray c(kShortModeCapacity + 1);
  RunStats st;
  RetryPolicy policy = RetryPolicy::bgq_short();
  const auto oc = eng.execute(
      [&](Txn& t) {
        for (size_t i = 0; i < kShortModeCapacity + 1; ++i)
          t.write(c[i], 1);
      },
      policy, st);
  CHECK(oc.kind == OutcomeKind::SerializedCommit);
  CHECK(st.aborts_capacity.load() >= 1);
  CHECK(st.serializations.load() == 1);
  for (size_t i = 0; i < kShortModeCapacity + 1; ++i) CHECK(c[i].peek() == 1);
}

TEST_CASE("txn_read keeps the observed version when nothing changes") {
  TxnEngine eng;
  CellArray c(1);
  c[0].unsafe_store(3);
  const std::uint64_t v0 = c[0].version.load();
  TxnContext ctx;
  eng.begin(ctx, RetryPolicy::rtm(), false);
  CHECK(eng.read(ctx, c[0]) == 3);
  eng.commit(ctx);
  eng.finish(ctx);
  CHECK(c[0].version.load() == v0);
}

TEST_CASE("read validation catches a concurrent committed write") {
  TxnEngine eng;
  CellArray c(1);
  RunStats st;
  TxnContext ctx;
  eng.begin(ctx, RetryPolicy::rtm(), false);
  (void)eng.read(ctx, c[0]);
  // Another transaction commits a write to the same cell.
  eng.execute([&](Txn& t) { t.write(c[0], 1); }, RetryPolicy::rtm(), st);
  CHECK_THROWS_AS(eng.commit(ctx), TxnAbort);
  eng.rollback(ctx);
  eng.finish(ctx);
}

TEST_CASE("fifth distinct read with capacity four overflows") {
  TxnEngine eng;
  CellArray c(5);
  RetryPolicy p = RetryPolicy::rtm();
  p.capacity = 4;
  TxnContext ctx;
  eng.begin(ctx, p, false);
  for (int i = 0; i < 4; ++i) (void)eng.read(ctx, c[i]);
  try {
    (void)eng.read(ctx, c[4]);
    FAIL("expected BufferOverflow");
  } catch (const TxnAbort& a) {
    CHECK(a.reason == AbortReason::BufferOverflow);
  }
  eng.rollback(ctx);
  eng.finish(ctx);
}

TEST_CASE("rollback leaves the cell untouched") {
  TxnEngine eng;
  CellArray c(1);
  c[0].unsafe_store(42);
  const std::uint64_t v0 = c[0].version.load();
  TxnContext ctx;
  eng.begin(ctx, RetryPolicy::rtm(), false);
  eng.write(ctx, c[0], 99);
  eng.rollback(ctx);
  eng.finish(ctx);
  CHECK(c[0].peek() == 42);
  CHECK(c[0].version.load() == v0);
  CHECK(c[0].lock_word.load() == 0);
}

TEST_CASE("commit bumps the version of written cells") {
  TxnEngine eng;
  CellArray c(1);
  RunStats st;
  const std::uint64_t v0 = c[0].version.load();
  eng.execute([&](Txn& t) { t.write(c[0], 5); }, RetryPolicy::rtm(), st);
  CHECK(c[0].version.load() >= v0 + 1);
}

TEST_CASE("two writers of one cell conflict") {
  TxnEngine eng;
  CellArray c(1);
  TxnContext a, b;
  eng.begin(a, RetryPolicy::rtm(), false);
  eng.begin(b, RetryPolicy::rtm(), false);
  eng.write(a, c[0], 1);
  try {
    eng.write(b, c[0], 2);
    FAIL("expected MemoryConflict");
  } catch (const TxnAbort& ab) {
    CHECK(ab.reason == AbortReason::MemoryConflict);
  }
  eng.rollback(b);
  eng.finish(b);
  eng.commit(a);
  eng.finish(a);
  CHECK(c[0].peek() == 1);
}

TEST_CASE("atomics doom a conflicting live transaction, not themselves") {
  TxnEngine eng;
  CellArray c(1);
  TxnContext ctx;
  eng.begin(ctx, RetryPolicy::rtm(), false);
  eng.write(ctx, c[0], 7);  // takes the cell lock

  std::thread t([&] { eng.atomic_acc(c[0], 1, AccOp::U64Sum); });
  // The holder notices it is doomed at its next operation and aborts.
  for (;;) {
    try {
      (void)eng.read(ctx, c[0]);
    } catch (const TxnAbort& a) {
      CHECK(a.reason == AbortReason::MemoryConflict);
      break;
    }
    std::this_thread::yield();
  }
  eng.rollback(ctx);
  eng.finish(ctx);
  t.join();
  CHECK(c[0].peek() == 1);  // the atomic won; the txn write vanished
}

TEST_CASE("policy semantics under forced aborts") {
  // fault_rate = 1 makes every speculative attempt abort with Other.
  auto run = [](RetryPolicy p) {
    TxnEngine eng;
    CellArray c(1);
    RunStats st;
    Rng rng(1);
    p.fault_rate = 1.0;
    const auto oc = eng.execute([&](Txn& t) { t.write(c[0], 1); }, p, st,
                                nullptr, &rng);
    CHECK(oc.kind == OutcomeKind::SerializedCommit);
    CHECK(c[0].peek() == 1);
    return st.snapshot();
  };

  SUBCASE("hle serializes after exactly one abort") {
    const auto st = run(RetryPolicy::hle());
    CHECK(st.total_aborts() == 1);
    CHECK(st.serializations == 1);
  }
  SUBCASE("bgq auto-retry serializes after exactly ten rollbacks") {
    const auto st = run(RetryPolicy::bgq_long());
    CHECK(st.total_aborts() == 10);
    CHECK(st.serializations == 1);
  }
  SUBCASE("rtm never exceeds its retry bound") {
    RetryPolicy p = RetryPolicy::rtm();
    p.base_backoff = std::chrono::nanoseconds(1);  // keep the test fast
    const auto st = run(p);
    CHECK(st.total_aborts() == static_cast<std::uint64_t>(p.max_retries));
    CHECK(st.serializations == 1);
  }
  SUBCASE("locks policy serializes immediately") {
    const auto st = run(RetryPolicy::locks());
    CHECK(st.total_aborts() == 0);
    CHECK(st.serializations == 1);
  }
}

TEST_CASE("abort accounting identity holds under mixed load") {
  TxnEngine eng;
  CellArray c(4);
  RunStats st;
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      Rng rng(t);
      RetryPolicy p = RetryPolicy::rtm();
      p.base_backoff = std::chrono::nanoseconds(100);
      p.fault_rate = 0.05;
      for (int i = 0; i < 200; ++i) {
        eng.execute(
            [&](Txn& tx) {
              const Word a = tx.read(c[rng.below(4)]);
              tx.write(c[rng.below(4)], a + 1);
            },
            p, st, nullptr, &rng);
      }
    });
  }
  for (auto& t : ts) t.join();
  const auto s = st.snapshot();
  CHECK(s.commits + s.serializations == 800);
  CHECK(s.total_aborts() ==
        s.aborts_conflict + s.aborts_capacity + s.aborts_other);
}

TEST_CASE("raising capacity never increases overflow counts") {
  // Deterministic single-threaded workload; contention held at zero.
  std::vector<std::uint64_t> overflows;
  for (size_t cap : {8u, 16u, 32u, 64u}) {
    TxnEngine eng;
    eng.set_deterministic(true);
    CellArray c(128);
    RunStats st;
    Rng rng(99);
    RetryPolicy p = RetryPolicy::rtm();
    p.capacity = cap;
    for (int i = 0; i < 200; ++i) {
      const size_t span = 1 + rng.below(48);
      eng.execute(
          [&](Txn& t) {
            for (size_t k = 0; k < span; ++k) t.write(c[k], i);
          },
          p, st, nullptr, &rng);
    }
    overflows.push_back(st.aborts_capacity.load());
  }
  for (size_t i = 1; i < overflows.size(); ++i)
    CHECK(overflows[i] <= overflows[i - 1]);
}

TEST_CASE("body faults propagate after rollback") {
  TxnEngine eng;
  CellArray c(1);
  c[0].unsafe_store(5);
  RunStats st;
  CHECK_THROWS_AS(eng.execute(
                      [&](Txn& t) {
                        t.write(c[0], 9);
                        throw std::runtime_error("boom");
                      },
                      RetryPolicy::rtm(), st),
                  std::runtime_error);
  CHECK(c[0].peek() == 5);
  CHECK(c[0].lock_word.load() == 0);
}

TEST_CASE("f64 helpers round-trip through cells") {
  TxnEngine eng;
  CellArray c(1);
  RunStats st;
  c[0].unsafe_store(f64_to_word(0.25));
  eng.execute([&](Txn& t) { t.add_f64(c[0], 0.5); }, RetryPolicy::rtm(), st);
  CHECK(word_to_f64(c[0].peek()) == doctest::Approx(0.75));
  eng.atomic_acc(c[0], f64_to_word(0.25), AccOp::F64Sum);
  CHECK(word_to_f64(c[0].peek()) == doctest::Approx(1.0));
}
