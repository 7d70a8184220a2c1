#include "aam/perf_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace aam {

LinearFit fit_linear(std::span<const CostSample> samples) {
  if (samples.size() < 2)
    throw ValidationError("fit_linear: need at least two samples");
  double sx = 0, sy = 0;
  for (const CostSample& s : samples) {
    sx += static_cast<double>(s.n_vertices);
    sy += s.mean_time_ns;
  }
  const double n = static_cast<double>(samples.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0;
  for (const CostSample& s : samples) {
    const double dx = static_cast<double>(s.n_vertices) - mx;
    sxx += dx * dx;
    sxy += dx * (s.mean_time_ns - my);
  }
  if (sxx == 0.0)
    throw ValidationError("fit_linear: degenerate input, all n equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (const CostSample& s : samples) {
    const double pred =
        fit.slope * static_cast<double>(s.n_vertices) + fit.intercept;
    ss_res += (s.mean_time_ns - pred) * (s.mean_time_ns - pred);
    ss_tot += (s.mean_time_ns - my) * (s.mean_time_ns - my);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

Crossing crossing_point(const LinearFit& atomics, const LinearFit& htm) {
  if (atomics.slope <= htm.slope) {
    return {false, 0.0, "atomics slope does not exceed transaction slope"};
  }
  if (htm.intercept <= atomics.intercept) {
    return {false, 0.0,
            "transaction intercept does not exceed atomics intercept"};
  }
  return {true,
          (htm.intercept - atomics.intercept) / (atomics.slope - htm.slope),
          ""};
}

std::vector<CostSample> load_cost_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples CSV: " + path);
  std::vector<CostSample> out;
  std::string line;
  bool header = true;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ls(line);
    CostSample s;
    std::string field;
    if (!std::getline(ls, s.mechanism, ',') || !std::getline(ls, field, ','))
      throw ParseError("bad CSV row at line " + std::to_string(line_no));
    try {
      s.n_vertices = std::stoull(field);
      if (!std::getline(ls, field, ','))
        throw ParseError("bad CSV row at line " + std::to_string(line_no));
      s.mean_time_ns = std::stod(field);
    } catch (const std::invalid_argument&) {
      throw ParseError("non-numeric CSV field at line " +
                       std::to_string(line_no));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace aam
