#pragma once

// Adaptive Gauss-Kronrod (G7/K15) quadrature for smooth oscillatory
// integrands. The caller supplies the dominant oscillation rate so the
// initial panels resolve the phase; panels are then bisected greedily on the
// embedded error estimate until the absolute tolerance or the budget is hit.

#include <algorithm>
#include <cstddef>
#include <queue>
#include <vector>

#include "echoisac/common.hpp"

namespace echoisac {

namespace detail {

// K15 abscissae (non-negative half) and weights; G7 weights sit on the odd
// Kronrod nodes. Standard QUADPACK constants.
inline constexpr double gk_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelEstimate {
  double value = 0.0;
  double error = 0.0;
};

template <typename F>
PanelEstimate gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0, gauss = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double fx = f(c - h * gk_x[i]) + f(c + h * gk_x[i]);
    kron += gk_wk[i] * fx;
    if (i % 2 == 1) gauss += gk_wg[i / 2] * fx;  // G7 pair nodes sit at i = 1, 3, 5
  }
  const double fc = f(c);
  kron += gk_wk[7] * fc;
  gauss += gk_wg[3] * fc;
  kron *= h;
  gauss *= h;
  // |K15 - G7| overestimates the K15 error on smooth panels; conservative.
  return {kron, std::abs(kron - gauss)};
}

}  // namespace detail

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;   // accumulated error estimate
  bool converged = false;
  long n_evals = 0;
};

// Integrate f over [a, b]. `omega` is the fastest phase rate [rad per unit t]
// present in f; initial panels span at most a quarter oscillation period.
template <typename F>
QuadratureResult integrate_oscillatory(F&& f, double a, double b, double omega, double abs_tol,
                                       long max_evals = 2'000'000) {
  QuadratureResult out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  const double max_panel = pi / (4.0 * std::max(omega, 1e-300));
  std::size_t n_init = static_cast<std::size_t>(std::ceil((b - a) / max_panel));
  n_init = std::clamp<std::size_t>(n_init, 8, 1u << 17);

  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  std::priority_queue<Panel> panels;

  auto eval_panel = [&](double lo, double hi) {
    const auto est = detail::gk15(f, lo, hi);
    out.n_evals += 15;
    return Panel{lo, hi, est.value, est.error};
  };

  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i < n_init; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) / n_init;
    const double hi = a + (b - a) * static_cast<double>(i + 1) / n_init;
    const Panel p = eval_panel(lo, hi);
    total += p.value;
    total_err += p.error;
    panels.push(p);
  }

  while (total_err > abs_tol && out.n_evals + 30 <= max_evals && !panels.empty()) {
    const Panel worst = panels.top();
    if (worst.error <= 0.0) break;
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = eval_panel(worst.a, mid);
    const Panel right = eval_panel(mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  out.value = total;
  out.error = total_err;
  out.converged = total_err <= abs_tol;
  return out;
}

}  // namespace echoisac
