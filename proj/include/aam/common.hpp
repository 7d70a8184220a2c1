#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace aam {

using Word = std::uint64_t;
using VertexId = std::uint32_t;
using ProcId = std::uint32_t;

inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

// Contract violations: a caller broke a documented precondition.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Bad user-facing configuration (CLI flags, spec strings). Exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A correctness check failed (oracle mismatch, invariant broken). Exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No forward progress within the configured budget.
struct WatchdogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seeded RNG wrapper. mt19937_64 is bit-exact across platforms; the helpers
// below avoid std::uniform_* distributions, whose output is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  // Uniform double in [0, 1) with 53 random bits.
  double canonical() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool coin() { return (gen_() & 1u) != 0; }

 private:
  std::mt19937_64 gen_;
};

inline double word_to_f64(Word w) { return std::bit_cast<double>(w); }
inline Word f64_to_word(double d) { return std::bit_cast<Word>(d); }

}  // namespace aam
