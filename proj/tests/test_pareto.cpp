#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "echoisac/bounds.hpp"
#include "echoisac/pareto.hpp"

using namespace echoisac;
using Catch::Approx;

TEST_CASE("normalized sensing share at a pinned split", "[pareto]") {
  // (1-0.3)^2 + 0.009375*0.09, frozen independently
  CHECK(sensing_norm_at(0.3, 0.009375) == Approx(0.4908437499999999).epsilon(1e-14));
  CHECK(sensing_norm_at(0.0, 0.009375) == 1.0);
  CHECK(sensing_norm_at(1.0, 0.009375) == Approx(0.009375).epsilon(1e-15));
}

TEST_CASE("default configuration lands at the frozen bandwidth lever arm", "[pareto]") {
  SystemConfig sys;
  CpmConfig cpm;
  const auto fc = fisher_coefficients(sys, cpm);
  CHECK(fc.b / fc.a == Approx(0.009375000000000003).epsilon(1e-12));
}

TEST_CASE("frontier endpoints and the exact quadratic identity", "[pareto]") {
  const double r = 0.009375;
  const auto pts = pareto_frontier(r, 401);
  REQUIRE(pts.size() == 401);
  CHECK(pts.front().beta == 0.0);
  CHECK(pts.front().sensing_norm == 1.0);
  CHECK(pts.front().comm_norm == 0.0);
  CHECK(pts.back().beta == 1.0);
  CHECK(pts.back().sensing_norm == Approx(r).epsilon(1e-14));
  CHECK(pts.back().comm_norm == 1.0);

  for (const auto& p : pts) {
    const double predicted = 1.0 - 2.0 * p.comm_norm + (1.0 + r) * p.comm_norm * p.comm_norm;
    CHECK(std::abs(p.sensing_norm - predicted) < 1e-12);
  }
}

TEST_CASE("sensing share is strictly convex in the split", "[pareto]") {
  const double r = 0.2;
  const auto pts = pareto_frontier(r, 201);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double mid = pts[i].sensing_norm;
    const double chord = 0.5 * (pts[i - 1].sensing_norm + pts[i + 1].sensing_norm);
    CHECK(mid < chord);
  }
  // interior minimum sits at beta = 1/(1+r), value r/(1+r)
  double best = 2.0;
  for (const auto& p : pts) best = std::min(best, p.sensing_norm);
  CHECK(best >= r / (1.0 + r) - 1e-12);
}

TEST_CASE("largest split meeting a sensing floor", "[pareto]") {
  // frozen: smaller root of (1+r) b^2 - 2 b + (1 - s_min) = 0
  const double b_star = optimal_beta(0.2, 0.9);
  CHECK(b_star == Approx(0.05159737336276171).epsilon(1e-12));
  CHECK(sensing_norm_at(b_star, 0.2) == Approx(0.9).epsilon(1e-12));

  CHECK(optimal_beta(0.009375000000000003, 0.99) == Approx(0.005012681269442842).epsilon(1e-12));

  // floor at the sensing-only point leaves nothing for data
  CHECK(optimal_beta(0.2, 1.0) == 0.0);
  // floor at the comm-only point frees the whole band
  CHECK(optimal_beta(0.2, 0.2) == 1.0);
}

TEST_CASE("grid search agrees with the closed-form optimum", "[pareto]") {
  const double r = 0.009375;
  const double s_min = 0.95;
  const double closed = optimal_beta(r, s_min);
  const auto pts = pareto_frontier(r, 200001);
  double best = 0.0;
  for (const auto& p : pts)
    if (p.sensing_norm >= s_min) best = std::max(best, p.beta);
  CHECK(std::abs(best - closed) < 1e-5);  // half a grid step
}

TEST_CASE("infeasible floors and degenerate grids are rejected", "[pareto]") {
  CHECK_THROWS_AS(optimal_beta(0.2, 1.5), config_error);
  CHECK_THROWS_AS(optimal_beta(0.2, 0.1), config_error);   // below the comm-only point
  CHECK_THROWS_AS(optimal_beta(-0.1, 0.5), config_error);
  CHECK_THROWS_AS(pareto_frontier(0.0, 10), config_error);
  CHECK_THROWS_AS(pareto_frontier(0.1, 1), config_error);
}
