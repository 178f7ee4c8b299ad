#pragma once

// Estimation-theoretic limits for delay (range) recovery from the modulated
// echo, and the coupling of residual frequency error into the data link.
//
// The delay bound treats the data symbols as random nuisance with known
// statistics (modified bound): the expected conditional Fisher information
// splits into a chirp term growing like kappa^2 T0^3 and a modulation term
// growing like h^2 sigma_b^2 N_s. fisher_oracle() evaluates the same
// expectation by brute force on the sample grid (no closed-form reuse) so the
// two routes check each other.

#include <cstdint>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"
#include "echoisac/rng.hpp"

namespace echoisac {

// Closed-form modified bound on delay variance [s^2].
inline double mcrb_tau(const SystemConfig& sys, const CpmConfig& cpm) {
  const double rho = sys.snr_observation_linear();
  const double kappa = sys.chirp_rate();
  const double t0 = sys.window_s;
  const double tc = cpm.symbol_period_s;
  const double ns = cpm.total_symbols(sys);
  const double denom = 16.0 * kappa * kappa * t0 * t0 * t0 * tc +
                       3.0 * cpm.h * cpm.h * cpm.symbol_variance() * ns;
  return 3.0 * t0 * tc / (2.0 * pi * pi * rho * denom);
}

// Delay-variance bound with the modulation term dropped (no data symbols):
// the ranging bound of a bare chirp over the same window.
inline double crb_sensing_only(const SystemConfig& sys) {
  const double rho = sys.snr_observation_linear();
  const double kappa = sys.chirp_rate();
  const double t0 = sys.window_s;
  return 3.0 / (32.0 * pi * pi * rho * kappa * kappa * t0 * t0);
}

// Bound on beat-frequency error variance [Hz^2]: f = 2 kappa tau.
inline double freq_error_variance(const SystemConfig& sys, const CpmConfig& cpm) {
  const double kappa = sys.chirp_rate();
  return 4.0 * kappa * kappa * mcrb_tau(sys, cpm);
}

// Monte-Carlo Fisher-information breakdown on the discrete sample grid.
struct FisherBreakdown {
  double sensing_info = 0.0;          // chirp-only sum (deterministic)
  double cross_info_mean = 0.0;       // chirp x modulation cross sum, average
  double cross_info_std = 0.0;
  double modulation_info_mean = 0.0;  // modulation-only sum, average
  double modulation_info_std = 0.0;
  double scale_factor = 0.0;          // 2 |mu|^2 / sigma_z^2
  double fisher_mean = 0.0;           // scale * (I_s + 2*E[I_sc] + E[I_c])
  double mcrb = 0.0;                  // 1 / fisher_mean
  int n_draws = 0;
};

// Draws full random symbol vectors and accumulates the exact per-sample phase
// derivative sums. The per-symbol sample aggregates are hoisted, so each draw
// is O(N_s).
inline FisherBreakdown fisher_oracle(const SystemConfig& sys, const CpmConfig& cpm,
                                     int n_symbol_draws, std::uint64_t rng_seed) {
  if (n_symbol_draws < 1) throw config_error("fisher_oracle needs at least one draw");
  const double t_s = sys.sample_period_s();
  const int n = sys.n_samples();
  const int n_sps = cpm.samples_per_symbol(sys);
  const int n_sym = cpm.total_symbols(sys);
  const long long m0 = cpm.start_sample(sys);
  const double kappa = sys.chirp_rate();

  FisherBreakdown out;
  out.n_draws = n_symbol_draws;
  out.scale_factor = 2.0 * sys.snr_sample_linear();  // noise variance normalized to 1

  // chirp-only term: (4 pi kappa)^2 sum t_n^2
  double sum_t2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * t_s;
    sum_t2 += t * t;
  }
  out.sensing_info = 16.0 * pi * pi * kappa * kappa * sum_t2;

  // per-symbol aggregates over the samples the symbol occupies
  std::vector<double> time_sum(n_sym, 0.0);
  std::vector<double> count(n_sym, 0.0);
  for (int i = 0; i < n; ++i) {
    const long long x = i - m0;
    if (x < 0) continue;
    const long long k = x / n_sps;
    if (k >= n_sym) break;
    time_sum[k] += i * t_s;
    count[k] += 1.0;
  }

  const double slope = pi * cpm.h / cpm.symbol_period_s;  // |gamma_dot| per unit symbol value
  const auto alphabet = cpm.alphabet();

  RngStream rng(rng_seed);
  double sc_sum = 0.0, sc_sq = 0.0, c_sum = 0.0, c_sq = 0.0;
  for (int draw = 0; draw < n_symbol_draws; ++draw) {
    double cross = 0.0, mod = 0.0;
    for (int k = 0; k < n_sym; ++k) {
      const double b = alphabet[rng.uniform_index(alphabet.size())];
      cross += b * time_sum[k];
      mod += b * b * count[k];
    }
    // I_sc = -(4 pi kappa) * sum t_n gamma_dot(t_n)
    const double i_sc = -4.0 * pi * kappa * slope * cross;
    const double i_c = slope * slope * mod;
    sc_sum += i_sc;
    sc_sq += i_sc * i_sc;
    c_sum += i_c;
    c_sq += i_c * i_c;
  }
  const double inv = 1.0 / n_symbol_draws;
  out.cross_info_mean = sc_sum * inv;
  out.modulation_info_mean = c_sum * inv;
  out.cross_info_std = std::sqrt(std::max(0.0, sc_sq * inv - out.cross_info_mean * out.cross_info_mean));
  out.modulation_info_std = std::sqrt(std::max(0.0, c_sq * inv - out.modulation_info_mean * out.modulation_info_mean));
  out.fisher_mean =
      out.scale_factor * (out.sensing_info + 2.0 * out.cross_info_mean + out.modulation_info_mean);
  out.mcrb = 1.0 / out.fisher_mean;
  return out;
}

// Bandwidth-split coefficients -------------------------------------------------
//
// E[Fisher] = a * kappa^2 T0^2 + b / T_c^2 with
//   a = 32 pi^2 rho / 3,   b = 2 pi^2 rho h^2 sigma_b^2   (rho over the window).
// a/b is the lever arm between widening the sweep and speeding up the symbols.
struct FisherCoefficients {
  double a = 0.0;
  double b = 0.0;
  double ratio_ab = 0.0;             // a / b = 16 / (3 h^2 sigma_b^2)
  double carson_bandwidth_hz = 0.0;  // (1 + h) / T_c at the current config
  double simple_bandwidth_hz = 0.0;  // 1 / T_c
};

inline FisherCoefficients fisher_coefficients(const SystemConfig& sys, const CpmConfig& cpm) {
  const double rho = sys.snr_observation_linear();
  FisherCoefficients f;
  f.a = 32.0 * pi * pi * rho / 3.0;
  f.b = 2.0 * pi * pi * rho * cpm.h * cpm.h * cpm.symbol_variance();
  f.ratio_ab = f.a / f.b;
  f.carson_bandwidth_hz = (1.0 + cpm.h) / cpm.symbol_period_s;
  f.simple_bandwidth_hz = 1.0 / cpm.symbol_period_s;
  return f;
}

// Estimation -> demodulation coupling ------------------------------------------
//
// A residual beat-frequency error eps_f (variance bounded by
// freq_error_variance) rotates the data constellation by 2 pi eps_f T_c per
// symbol. Averaged over a burst of L_d symbols the phase-error variance is
// approximately (2 pi T_c sigma_eps L_d)^2 / 3, which scales the demodulator's
// symbol SNR down by 1/(1 + xi) with xi = rho_symbol * phase_var. The phase
// perturbation multiplies the signal, so it survives the per-symbol matched
// filter: the SNR it divides is the post-filter symbol SNR
// rho_symbol = snr_sample * N_sps.

inline double accumulated_phase_variance_exact(double sigma_eps_f_sq, double t_c, int l_d,
                                               double phase_ref_var = 0.0) {
  if (l_d < 1) return phase_ref_var;
  const double w = two_pi * t_c;
  const double ld = l_d;
  return w * w * sigma_eps_f_sq * (ld - 1.0) * (2.0 * ld - 1.0) / 6.0 + phase_ref_var;
}

inline double accumulated_phase_variance(double sigma_eps_f_sq, double t_c, int l_d) {
  const double w = two_pi * t_c * l_d;
  return w * w * sigma_eps_f_sq / 3.0;
}

struct CouplingReport {
  double mcrb_tau_s2 = 0.0;
  double sigma_eps_f_sq = 0.0;      // frequency-error variance bound [Hz^2]
  double phase_var = 0.0;           // burst-averaged phase-error variance [rad^2]
  double rho_symbol = 0.0;          // symbol SNR before coupling
  double xi = 0.0;                  // SNR loss factor
  double sinr_eff = 0.0;            // rho_symbol / (1 + xi)
  double eta_bits_per_symbol = 0.0; // log2(1 + sinr_eff)
  double eta_eff = 0.0;             // alphabet-capped
  double rate_bps = 0.0;            // L_d / T_pri * eta_eff
};

inline double symbol_snr_linear(const SystemConfig& sys, const CpmConfig& cpm) {
  return sys.snr_sample_linear() * cpm.samples_per_symbol(sys);
}

inline double coupling_xi(const SystemConfig& sys, const CpmConfig& cpm) {
  const double sig_f2 = freq_error_variance(sys, cpm);
  const double pv = accumulated_phase_variance(sig_f2, cpm.symbol_period_s, cpm.n_data_symbols(sys));
  return symbol_snr_linear(sys, cpm) * pv;
}

inline CouplingReport effective_rate(const SystemConfig& sys, const CpmConfig& cpm) {
  CouplingReport r;
  r.mcrb_tau_s2 = mcrb_tau(sys, cpm);
  const double kappa = sys.chirp_rate();
  r.sigma_eps_f_sq = 4.0 * kappa * kappa * r.mcrb_tau_s2;
  const int l_d = cpm.n_data_symbols(sys);
  r.phase_var = accumulated_phase_variance(r.sigma_eps_f_sq, cpm.symbol_period_s, l_d);
  r.rho_symbol = symbol_snr_linear(sys, cpm);
  r.xi = r.rho_symbol * r.phase_var;
  r.sinr_eff = r.rho_symbol / (1.0 + r.xi);
  r.eta_bits_per_symbol = std::log2(1.0 + r.sinr_eff);
  r.eta_eff = std::min(std::log2(static_cast<double>(cpm.alphabet_size)), r.eta_bits_per_symbol);
  r.rate_bps = l_d / sys.pri_s * r.eta_eff;
  return r;
}

}  // namespace echoisac
