#pragma once

#include <cstdint>

#include "aam/common.hpp"

namespace aam {

inline constexpr ProcId kNoProc = ~ProcId{0};

enum class DataFlow : std::uint8_t { FireAndForget, FireAndReturn };
enum class CommitMode : std::uint8_t { AlwaysSucceed, MayFail };

/// The four message types: FF/FR x AS/MF.
struct MessageClass {
  DataFlow flow = DataFlow::FireAndForget;
  CommitMode commit = CommitMode::AlwaysSucceed;
  bool operator==(const MessageClass&) const = default;
};

inline constexpr MessageClass kFFAS{DataFlow::FireAndForget,
                                    CommitMode::AlwaysSucceed};
inline constexpr MessageClass kFFMF{DataFlow::FireAndForget,
                                    CommitMode::MayFail};
inline constexpr MessageClass kFRAS{DataFlow::FireAndReturn,
                                    CommitMode::AlwaysSucceed};
inline constexpr MessageClass kFRMF{DataFlow::FireAndReturn,
                                    CommitMode::MayFail};

using OperatorId = std::uint32_t;

/// A message whose arrival executes a registered operator atomically at
/// the target process. reply_to is set iff the class is Fire-and-Return.
struct AtomicMessage {
  MessageClass cls;
  ProcId target = 0;
  OperatorId op = 0;
  VertexId element = 0;
  Word param = 0;
  ProcId reply_to = kNoProc;
};

/// Per-operator outcome. `failed` is an algorithm-level rollback (May-Fail
/// classes only), distinct from a hardware abort: the enclosing
/// transaction still commits.
struct OperatorResult {
  bool failed = false;
  Word value = 0;
};

}  // namespace aam
