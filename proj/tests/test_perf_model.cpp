#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aam/bench.hpp"
#include "aam/perf_model.hpp"

using namespace aam;

TEST_CASE("fit_linear recovers an exact line") {
  std::vector<CostSample> s{{"htm", 1, 3.0}, {"htm", 2, 5.0}, {"htm", 3, 7.0}};
  const LinearFit f = fit_linear(s);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("fit_linear handles a flat line") {
  std::vector<CostSample> s{{"atomics", 1, 4.5}, {"atomics", 2, 4.5}};
  const LinearFit f = fit_linear(s);
  CHECK(f.slope == doctest::Approx(0.0));
  CHECK(f.intercept == doctest::Approx(4.5));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("fit_linear rejects degenerate input") {
  std::vector<CostSample> s{{"htm", 2, 1.0}, {"htm", 2, 2.0}};
  CHECK_THROWS_AS(fit_linear(s), ValidationError);
  std::vector<CostSample> one{{"htm", 1, 1.0}};
  CHECK_THROWS_AS(fit_linear(one), ValidationError);
}

TEST_CASE("fit_linear reproduces noiseless coefficients to 1e-9 relative") {
  const double a = 37.25, b = 1205.5;
  std::vector<CostSample> s;
  for (std::uint64_t n = 1; n <= 40; n += 3)
    s.push_back({"htm", n, a * static_cast<double>(n) + b});
  const LinearFit f = fit_linear(s);
  CHECK(std::abs(f.slope - a) / a < 1e-9);
  CHECK(std::abs(f.intercept - b) / b < 1e-9);
}

TEST_CASE("crossing_point algebra") {
  const LinearFit at{10.0, 1.0, 1.0};
  const LinearFit htm{2.0, 41.0, 1.0};
  const Crossing c = crossing_point(at, htm);
  REQUIRE(c.exists);
  CHECK(c.n_star == doctest::Approx(5.0));
}

TEST_CASE("identical fits have no crossing") {
  const LinearFit f{3.0, 10.0, 1.0};
  const Crossing c = crossing_point(f, f);
  CHECK_FALSE(c.exists);
  CHECK_FALSE(c.reason.empty());
}

TEST_CASE("crossing requires the predicted regime") {
  // Transactions cheaper at the intercept: no crossing to report.
  CHECK_FALSE(crossing_point({10.0, 50.0, 1.0}, {2.0, 1.0, 1.0}).exists);
  // Transactions steeper: no crossing either.
  CHECK_FALSE(crossing_point({2.0, 1.0, 1.0}, {10.0, 50.0, 1.0}).exists);
}

TEST_CASE("crossing point is invariant under common rescaling") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const double a_at = 5.0 + rng.canonical() * 20.0;
    const double a_htm = rng.canonical() * a_at * 0.9;
    const double b_at = rng.canonical() * 10.0;
    const double b_htm = b_at + 1.0 + rng.canonical() * 100.0;
    const Crossing base =
        crossing_point({a_at, b_at, 1.0}, {a_htm, b_htm, 1.0});
    REQUIRE(base.exists);
    for (double k : {0.001, 3.0, 1e6}) {
      const Crossing scaled = crossing_point({a_at * k, b_at * k, 1.0},
                                             {a_htm * k, b_htm * k, 1.0});
      REQUIRE(scaled.exists);
      CHECK(scaled.n_star ==
            doctest::Approx(base.n_star).epsilon(1e-9));
    }
  }
}

TEST_CASE("simulator cost samples land in the predicted regime") {
  CostModel cost;  // defaults: txn overhead dominates the atomic op cost
  const std::vector<std::uint32_t> sizes{1, 2, 4, 8, 16, 32, 64};
  const auto samples =
      activity_cost_samples(sizes, 16, cost, RetryPolicy::rtm());
  std::vector<CostSample> at, htm;
  for (const auto& s : samples) (s.mechanism == "atomics" ? at : htm).push_back(s);
  const LinearFit fa = fit_linear(at);
  const LinearFit fh = fit_linear(htm);
  CHECK(fa.r2 > 0.95);
  CHECK(fh.r2 > 0.95);
  CHECK(fh.intercept > fa.intercept);
  CHECK(fh.slope < fa.slope);
  const Crossing c = crossing_point(fa, fh);
  REQUIRE(c.exists);
  CHECK(std::isfinite(c.n_star));
  CHECK(c.n_star > 0.0);
}

TEST_CASE("cost sample CSV round-trips through the loader") {
  const auto path =
      (std::filesystem::temp_directory_path() / "aam_fit.csv").string();
  const std::vector<CostSample> samples{
      {"htm", 4, 128.0}, {"atomics", 4, 40.0}, {"htm", 8, 136.0}};
  {
    std::ofstream f(path);
    to_csv(samples).write(f);
  }
  const auto back = load_cost_samples(path);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].mechanism == samples[i].mechanism);
    CHECK(back[i].n_vertices == samples[i].n_vertices);
    CHECK(back[i].mean_time_ns == doctest::Approx(samples[i].mean_time_ns));
  }
  std::remove(path.c_str());
  CHECK_THROWS(load_cost_samples("/nonexistent.csv"));
}
