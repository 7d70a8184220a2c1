#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aam/common.hpp"

namespace aam {

/// One measured point: mean time to execute an activity touching
/// n_vertices elements with the given mechanism.
struct CostSample {
  std::string mechanism;  // "atomics" | "htm"
  std::uint64_t n_vertices = 1;
  double mean_time_ns = 0.0;
};

/// Least-squares line time = slope * n + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares over (n_vertices, mean_time_ns). Requires at
/// least two distinct n values; throws ValidationError otherwise.
LinearFit fit_linear(std::span<const CostSample> samples);

struct Crossing {
  bool exists = false;
  double n_star = 0.0;
  std::string reason;  // why there is no crossing, when exists is false
};

/// Crossing point of the atomics and transaction cost lines. Exists in the
/// predicted regime slope_at > slope_htm and intercept_htm > intercept_at,
/// at n* = (B_htm - B_at) / (A_at - A_htm).
Crossing crossing_point(const LinearFit& atomics, const LinearFit& htm);

/// Reads a CostSample CSV with columns mechanism,n_vertices,mean_time_ns
/// (header required).
std::vector<CostSample> load_cost_samples(const std::string& path);

}  // namespace aam
