#pragma once

// Frame-start acquisition via a two-correlator GLRT.
//
// At candidate offset m the receiver forms, over the L_p preamble SAMPLES
// (L_p here and in every formula below counts samples, not symbols):
//   C_0(m) = sum_n d[m+n] e^{-j 2 pi f_hat n T_s}            (plain tone)
//   C_p(m) = sum_n d[m+n] e^{-j gamma_p[n]} e^{-j 2 pi f_hat n T_s}
// and the statistic Lambda = |C_p|^2 - |C_0|^2. Aligned with the preamble,
// stripping gamma_p makes C_p coherent; elsewhere C_0 wins.
//
// Under either hypothesis (C_p, C_0) is jointly circular Gaussian:
//   means  H1: A e^{j psi} [chi(eps),      Gamma~_p(eps)]
//          H0: A e^{j psi} [Gamma~_p*(eps), chi(eps)]
//   cov    [[sigma^2, s_z^2 Gamma_p*], [s_z^2 Gamma_p, sigma^2]],
//   sigma^2 = L_p s_z^2,
// with chi the Dirichlet sum of the residual frequency error eps and
// Gamma~_p the modulation sum shifted by eps. The statistic is an indefinite
// quadratic form; its characteristic function is rational-exponential and the
// CDF follows by Gil-Pelaez inversion:
//   F(eta) = 1/2 - (1/pi) Int_0^inf Im[phi(t) e^{-j t eta}] / t dt.

#include <array>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"
#include "echoisac/quadrature.hpp"
#include "echoisac/signal.hpp"

namespace echoisac {

struct CorrelatorPair {
  cplx preamble{};  // C_p
  cplx plain{};     // C_0
};

inline double glrt_statistic(const CorrelatorPair& c) {
  return std::norm(c.preamble) - std::norm(c.plain);
}

inline CorrelatorPair correlate(const BeatSignal& sig, double f_hat_hz, const CpmConfig& cpm,
                                const SystemConfig& sys, long long m) {
  const int n_sps = cpm.samples_per_symbol(sys);
  const int l_p = cpm.preamble_symbols * n_sps;
  if (m < 0 || m + l_p > static_cast<long long>(sig.samples.size()))
    throw config_error("correlation window outside the signal");
  const double t_s = 1.0 / sig.sample_rate_hz;
  const auto gamma = preamble_phase_table(cpm, sys);

  const double dphi = -two_pi * f_hat_hz * t_s;
  const cplx rot{std::cos(dphi), std::sin(dphi)};
  cplx w{1.0, 0.0};
  CorrelatorPair out;
  for (int n = 0; n < l_p; ++n) {
    const cplx v = sig.samples[static_cast<std::size_t>(m + n)] * w;
    out.plain += v;
    const double g = gamma[static_cast<std::size_t>(n)];
    out.preamble += v * cplx{std::cos(g), -std::sin(g)};
    w *= rot;
  }
  return out;
}

// Dirichlet coherence sum chi(eps) = sum_{n<L_p} e^{j 2 pi eps n T_s}.
inline cplx coherence_factor(double eps_f_hz, int l_p_samples, double t_s) {
  const double x = pi * eps_f_hz * t_s;
  if (std::abs(std::sin(x)) < 1e-14)
    return {static_cast<double>(l_p_samples) * std::cos(x * (l_p_samples - 1)),
            static_cast<double>(l_p_samples) * std::sin(x * (l_p_samples - 1))};
  const double mag = std::sin(x * l_p_samples) / std::sin(x);
  const double ph = x * (l_p_samples - 1);
  return {mag * std::cos(ph), mag * std::sin(ph)};
}

struct GlrtModel {
  double amplitude = 0.0;       // A = |mu_s|
  double noise_var = 1.0;       // per-sample s_z^2
  double sigma2 = 0.0;          // L_p s_z^2 (correlator output variance)
  int l_p_samples = 0;
  double eps_f_hz = 0.0;
  cplx gamma_p{};               // sum e^{j gamma_p[n]} (no frequency shift)
  cplx nu_c{};                  // conj(gamma_p) / L_p
  std::array<cplx, 2> mean_h1;  // [E C_p, E C_0] with the preamble aligned
  std::array<cplx, 2> mean_h0;  // [E C_p, E C_0] on the bare tone
  cplx cov_cross{};             // E[(C_p - mu)(C_0 - mu)*] = s_z^2 conj(gamma_p)
};

inline GlrtModel build_model(const SystemConfig& sys, const CpmConfig& cpm, double eps_f_hz = 0.0) {
  const int n_sps = cpm.samples_per_symbol(sys);
  const int l_p = cpm.preamble_symbols * n_sps;
  const double t_s = sys.sample_period_s();
  const auto gamma = preamble_phase_table(cpm, sys);

  GlrtModel m;
  m.amplitude = sys.echo_amplitude();
  m.noise_var = sys.noise_variance();
  m.sigma2 = l_p * m.noise_var;
  m.l_p_samples = l_p;
  m.eps_f_hz = eps_f_hz;

  cplx gp{}, gp_shift{};
  for (int n = 0; n < l_p; ++n) {
    const double g = gamma[static_cast<std::size_t>(n)];
    gp += cplx{std::cos(g), std::sin(g)};
    const double gs = g + two_pi * eps_f_hz * n * t_s;
    gp_shift += cplx{std::cos(gs), std::sin(gs)};
  }
  m.gamma_p = gp;
  m.nu_c = std::conj(gp) / static_cast<double>(l_p);
  m.cov_cross = m.noise_var * std::conj(gp);

  const cplx chi = coherence_factor(eps_f_hz, l_p, t_s);
  m.mean_h1 = {m.amplitude * chi, m.amplitude * gp_shift};
  m.mean_h0 = {m.amplitude * std::conj(gp_shift), m.amplitude * chi};
  return m;
}

enum class Hypothesis { preamble_aligned, tone_only };

namespace detail {

inline const std::array<cplx, 2>& model_mean(const GlrtModel& m, Hypothesis hyp) {
  return hyp == Hypothesis::preamble_aligned ? m.mean_h1 : m.mean_h0;
}

}  // namespace detail

// Characteristic function of Lambda = |C_p|^2 - |C_0|^2:
//   phi(t) = exp(j t nu^H Q (I - j t R Q)^{-1} nu) / det(I - j t R Q),
// Q = diag(1, -1), R the 2x2 covariance. det is real:
// det = 1 + t^2 sigma^4 (1 - |nu_c|^2).
inline cplx cf_lambda(const GlrtModel& m, double t, Hypothesis hyp) {
  const auto& nu = detail::model_mean(m, hyp);
  const double s2 = m.sigma2;
  const cplx c = m.cov_cross;
  // M = I - j t R Q = [[1 - j t s2,  j t c], [-j t conj(c), 1 + j t s2]]
  const cplx m00{1.0, -t * s2};
  const cplx m01 = cplx{0.0, t} * c;
  const cplx m10 = cplx{0.0, -t} * std::conj(c);
  const cplx m11{1.0, t * s2};
  const cplx det = m00 * m11 - m01 * m10;
  // x = M^{-1} nu
  const cplx x0 = (m11 * nu[0] - m01 * nu[1]) / det;
  const cplx x1 = (-m10 * nu[0] + m00 * nu[1]) / det;
  const cplx quad = std::conj(nu[0]) * x0 - std::conj(nu[1]) * x1;  // nu^H Q x
  return std::exp(cplx{0.0, t} * quad) / det;
}

struct GilPelaezResult {
  double value = 0.0;
  double error = 0.0;  // quadrature + truncation estimate
  bool converged = false;
  long n_evals = 0;
};

// CDF of Lambda by Gil-Pelaez inversion.
//
// The CF magnitude has the exact closed form
//   |phi(t)| = exp(-t^2 s2 S' / (1 + lam^2 t^2)) / (1 + lam^2 t^2),
//   lam^2 = sigma^4 (1 - |nu_c|^2),  S' = |nu_p|^2 + |nu_0|^2 - 2 Re(nu_c nu_p* nu_0),
// with the exponent monotone decreasing to -D_inf = -S'/(sigma^2(1-|nu_c|^2)).
// The truncation point T is grown until the rigorous tail bound
//   (1/pi) Int_T^inf |phi|/t dt <= exp(Re(T)) / (2 pi lam^2 T^2)
// is inside the budget; the finite part uses oscillation-aware adaptive GK.
inline GilPelaezResult cdf_lambda(const GlrtModel& m, double eta, Hypothesis hyp,
                                  double abs_tol = 1e-6) {
  const auto& nu = detail::model_mean(m, hyp);
  const double s2 = m.sigma2;
  const double lam2 = s2 * s2 * std::max(0.0, 1.0 - std::norm(m.nu_c));
  const double sprime =
      std::max(0.0, std::norm(nu[0]) + std::norm(nu[1]) -
                        2.0 * std::real(m.nu_c * std::conj(nu[0]) * nu[1]));

  GilPelaezResult out;
  if (lam2 <= 0.0) return out;  // fully coherent preamble: no det decay, report failure

  const double tail_budget = 0.4 * abs_tol;
  auto tail_bound = [&](double T) {
    const double T2 = T * T;
    const double expo = -T2 * s2 * sprime / (1.0 + lam2 * T2);
    return std::exp(std::max(expo, -600.0)) / (2.0 * pi * lam2 * T2);
  };
  double t_max = 1.0 / std::sqrt(lam2);
  int guard = 0;
  while (tail_bound(t_max) > tail_budget) {
    t_max *= 2.0;
    if (++guard > 200) return out;  // cannot close the tail: report failure
  }

  const double e_lambda = std::norm(nu[0]) - std::norm(nu[1]);
  const double omega =
      std::abs(eta) + std::abs(e_lambda) + 3.0 * (s2 + std::sqrt(s2 * sprime));

  auto integrand = [&](double t) {
    const cplx phi = cf_lambda(m, t, hyp);
    const double ph = -t * eta;
    const cplx r = phi * cplx{std::cos(ph), std::sin(ph)};
    return r.imag() / t;
  };

  const auto q = integrate_oscillatory(integrand, 1e-300, t_max, omega, 0.5 * abs_tol * pi,
                                       4'000'000);
  const double tail = tail_bound(t_max);
  out.value = 0.5 - q.value / pi;
  out.error = q.error / pi + tail;
  out.converged = q.converged && tail < abs_tol;
  out.n_evals = q.n_evals;
  if (out.converged) out.value = std::clamp(out.value, 0.0, 1.0);
  return out;
}

struct DetectionPoint {
  double pd = 0.0;
  double pfa = 0.0;
  bool converged = false;
};

inline DetectionPoint pd_pfa(const GlrtModel& m, double eta, double abs_tol = 1e-6) {
  const auto f1 = cdf_lambda(m, eta, Hypothesis::preamble_aligned, abs_tol);
  const auto f0 = cdf_lambda(m, eta, Hypothesis::tone_only, abs_tol);
  return {1.0 - f1.value, 1.0 - f0.value, f1.converged && f0.converged};
}

// Threshold with P(Lambda > eta | tone only) = pfa_target, by bisection on
// the analytic CDF. The bracket grows geometrically from +-sigma^2.
inline double solve_threshold(const GlrtModel& m, double pfa_target, double rel_tol = 1e-4) {
  if (!(pfa_target > 0.0) || pfa_target >= 1.0)
    throw config_error("false-alarm target must be in (0, 1)");
  auto pfa_at = [&](double eta) {
    const auto r = cdf_lambda(m, eta, Hypothesis::tone_only);
    if (!r.converged) throw std::runtime_error("cdf evaluation did not converge");
    return 1.0 - r.value;
  };
  double lo = -m.sigma2, hi = m.sigma2;
  int guard = 0;
  while (pfa_at(lo) < pfa_target) {  // pfa decreasing in eta: need pfa(lo) >= target
    lo *= 2.0;
    if (++guard > 80) throw std::runtime_error("threshold bracket search failed (low side)");
  }
  guard = 0;
  while (pfa_at(hi) > pfa_target) {
    hi *= 2.0;
    if (++guard > 80) throw std::runtime_error("threshold bracket search failed (high side)");
  }
  double eta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    eta = 0.5 * (lo + hi);
    const double p = pfa_at(eta);
    if (std::abs(p - pfa_target) < rel_tol * pfa_target) return eta;
    if (p > pfa_target)
      lo = eta;
    else
      hi = eta;
  }
  return eta;
}

// Small-offset detection degradation: Pd(eps) ~ Pd(0) (1 - (pi L_p eps T_s)^2 / 3).
inline double pd_cfo_approx(double pd0, double eps_f_hz, int l_p_samples, double t_s) {
  const double x = pi * l_p_samples * eps_f_hz * t_s;
  return pd0 * (1.0 - x * x / 3.0);
}

struct SyncResult {
  long long m_hat = 0;
  double lambda_max = 0.0;
  bool detected = false;
};

// Scan all offsets that keep the preamble window inside the signal.
inline SyncResult synchronize(const BeatSignal& sig, double f_hat_hz, const CpmConfig& cpm,
                              const SystemConfig& sys, double eta) {
  const int n_sps = cpm.samples_per_symbol(sys);
  const int l_p = cpm.preamble_symbols * n_sps;
  const long long n = static_cast<long long>(sig.samples.size());
  if (n < l_p) throw config_error("signal shorter than the preamble");
  const double t_s = 1.0 / sig.sample_rate_hz;
  const auto gamma = preamble_phase_table(cpm, sys);

  // demix once: w[k] = d[k] e^{-j 2 pi f k T_s}; then
  // C_0(m) = e^{j 2 pi f m T_s} (W[m+L_p] - W[m]) via prefix sums and
  // C_p(m) = e^{j 2 pi f m T_s} sum_n w[m+n] e^{-j gamma_p[n]}; the leading
  // rotation is unimodular, so |.| and Lambda are unaffected and dropped.
  std::vector<cplx> w(sig.samples.size());
  {
    const double dphi = -two_pi * f_hat_hz * t_s;
    const cplx rot{std::cos(dphi), std::sin(dphi)};
    cplx ph{1.0, 0.0};
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = sig.samples[k] * ph;
      ph *= rot;
    }
  }
  std::vector<cplx> prefix(w.size() + 1, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < w.size(); ++k) prefix[k + 1] = prefix[k] + w[k];
  std::vector<cplx> tmpl(static_cast<std::size_t>(l_p));
  for (int k = 0; k < l_p; ++k) {
    const double g = gamma[static_cast<std::size_t>(k)];
    tmpl[static_cast<std::size_t>(k)] = {std::cos(g), -std::sin(g)};
  }

  SyncResult best;
  best.lambda_max = -std::numeric_limits<double>::infinity();
  for (long long m = 0; m + l_p <= n; ++m) {
    cplx cp{0.0, 0.0};
    const cplx* wp = w.data() + m;
    for (int k = 0; k < l_p; ++k) cp += wp[k] * tmpl[static_cast<std::size_t>(k)];
    const cplx c0 = prefix[static_cast<std::size_t>(m + l_p)] - prefix[static_cast<std::size_t>(m)];
    const double lam = std::norm(cp) - std::norm(c0);
    if (lam > best.lambda_max) {
      best.lambda_max = lam;
      best.m_hat = m;
    }
  }
  best.detected = best.lambda_max > eta;
  return best;
}

}  // namespace echoisac
