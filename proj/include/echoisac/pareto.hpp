#pragma once

// Bandwidth-split tradeoff between ranging precision and data rate.
//
// Giving the modulation a fraction beta of the sweep bandwidth leaves (1-beta)
// for the chirp. With the Fisher split E[I] = a kappa^2 T0^2 + b / T_c^2 and
// T_pri = T0, both terms scale like B^2, so normalizing by the sensing-only
// point gives
//   sensing_norm(beta) = (1-beta)^2 + (b/a) beta^2,   comm_norm(beta) = beta,
// and the frontier satisfies the exact identity
//   sensing_norm = 1 - 2 comm_norm + (1 + b/a) comm_norm^2.

#include <vector>

#include "echoisac/common.hpp"

namespace echoisac {

struct TradeoffPoint {
  double beta = 0.0;
  double sensing_norm = 0.0;  // normalized Fisher information (1 at beta = 0)
  double comm_norm = 0.0;     // normalized communication bandwidth
};

inline double sensing_norm_at(double beta, double ratio_ba) {
  return (1.0 - beta) * (1.0 - beta) + ratio_ba * beta * beta;
}

inline std::vector<TradeoffPoint> pareto_frontier(double ratio_ba, int n_points) {
  if (!(ratio_ba > 0.0)) throw config_error("b/a ratio must be positive");
  if (n_points < 2) throw config_error("frontier needs at least two grid points");
  std::vector<TradeoffPoint> pts(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double beta = static_cast<double>(i) / (n_points - 1);
    pts[static_cast<std::size_t>(i)] = {beta, sensing_norm_at(beta, ratio_ba), beta};
  }
  return pts;
}

// Largest communication share whose sensing share still meets the floor
// sensing_norm(beta) >= s_min. Feasible floors lie in [b/a, 1]:
//  - s_min > b/a: the feasible set in [0,1] is [0, beta_minus]; the binding
//    solution is the smaller root of (1 + r) beta^2 - 2 beta + (1 - s_min) = 0.
//  - s_min = b/a: the comm-only point beta = 1 itself meets the floor and is
//    the unique remaining upper-branch point, so the optimum jumps to 1.
inline double optimal_beta(double ratio_ba, double s_min) {
  if (!(ratio_ba > 0.0)) throw config_error("b/a ratio must be positive");
  const double tol = 1e-9 * std::max(1.0, std::abs(ratio_ba));
  if (s_min > 1.0 + 1e-12) throw config_error("sensing floor above the sensing-only point");
  if (s_min < ratio_ba - tol) throw config_error("sensing floor below the comm-only point");
  if (s_min <= ratio_ba + tol) return 1.0;
  const double r = ratio_ba;
  const double disc = 1.0 - (1.0 + r) * (1.0 - std::min(s_min, 1.0));
  return (1.0 - std::sqrt(std::max(0.0, disc))) / (1.0 + r);
}

}  // namespace echoisac
