#pragma once

// Beat-frequency (range) estimation from the dechirped signal.
//
// Pipeline: strip the known preamble modulation over the estimation window
// (data-aided), locate the spectral peak on a zero-padded FFT grid, pull the
// peak off-grid with a three-point quadratic fit on log magnitude, then
// polish with a golden-section search on the exact correlation metric inside
// +-1 grid bin. The phase estimate is the argument of the correlation at the
// final frequency, referred back to the receiver time origin.

#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"
#include "echoisac/fft.hpp"
#include "echoisac/signal.hpp"

namespace echoisac {

struct FreqSearchConfig {
  std::size_t fft_len = 0;      // 0: next power of two >= 4x window length
  bool refine = true;           // golden-section polish on the exact metric
  long long window_start = -1;  // -1: modulation start sample from the config
  int window_len = -1;          // -1: preamble length (data-aided window)
  bool data_aided = true;       // strip the known preamble phase
};

struct FreqEstimate {
  double f_hat_hz = 0.0;
  double range_hat_m = 0.0;         // c * f_hat / (2 kappa)
  double theta_hat_rad = 0.0;       // phase at receiver sample 0
  double peak_metric = 0.0;         // |correlation|^2 at f_hat over the window
  double grid_resolution_hz = 0.0;  // f_s / fft_len
  std::size_t fft_len = 0;
  long long window_start = 0;
  int window_len = 0;
};

namespace detail {

// |sum_n y[n] e^{-j 2 pi f n T_s}|^2 and the correlation itself, via one
// incremental rotation per sample (no per-sample trig).
inline cplx window_correlation(const std::vector<cplx>& y, double f_hz, double t_s) {
  const double dphi = -two_pi * f_hz * t_s;
  const cplx rot{std::cos(dphi), std::sin(dphi)};
  cplx w{1.0, 0.0};
  cplx acc{0.0, 0.0};
  for (const cplx& v : y) {
    acc += v * w;
    w *= rot;
  }
  return acc;
}

}  // namespace detail

inline FreqEstimate estimate_beat_frequency(const BeatSignal& sig, const SystemConfig& sys,
                                            const CpmConfig& cpm,
                                            const FreqSearchConfig& search = {}) {
  const double t_s = 1.0 / sig.sample_rate_hz;
  const int n_sps = cpm.samples_per_symbol(sys);
  const long long m0 =
      search.window_start >= 0 ? search.window_start : cpm.start_sample(sys);
  const int win =
      search.window_len > 0 ? search.window_len : cpm.preamble_symbols * n_sps;

  if (m0 < 0 || m0 + win > static_cast<long long>(sig.samples.size()))
    throw config_error("signal shorter than the estimation window");

  std::size_t fft_len = search.fft_len
                            ? search.fft_len
                            : next_power_of_two(4 * static_cast<std::size_t>(win));
  if (fft_len < static_cast<std::size_t>(win))
    throw config_error("fft length shorter than the estimation window");
  if (!is_power_of_two(fft_len)) throw config_error("fft length must be a power of two");

  // data-aided window: remove the known preamble modulation
  std::vector<cplx> y(static_cast<std::size_t>(win));
  if (search.data_aided) {
    const SampledCpm pre(cpm.preamble_pattern(), cpm.h, n_sps, 0);
    for (int n = 0; n < win; ++n) {
      const double g = pre.phase_at(n);
      y[static_cast<std::size_t>(n)] =
          sig.samples[static_cast<std::size_t>(m0 + n)] * cplx{std::cos(g), -std::sin(g)};
    }
  } else {
    for (int n = 0; n < win; ++n)
      y[static_cast<std::size_t>(n)] = sig.samples[static_cast<std::size_t>(m0 + n)];
  }

  auto spectrum = fft_zero_padded(y, fft_len);

  // peak over nonnegative frequencies [0, f_s/2)
  const std::size_t half = fft_len / 2;
  std::size_t k_peak = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double m = std::norm(spectrum[k]);
    if (m > best) {
      best = m;
      k_peak = k;
    }
  }

  const double bin_hz = sig.sample_rate_hz / static_cast<double>(fft_len);

  // quadratic interpolation on log magnitude (off-grid peak)
  double delta = 0.0;
  if (k_peak > 0 && k_peak + 1 < half) {
    const double lm = 0.5 * std::log(std::max(std::norm(spectrum[k_peak - 1]), 1e-300));
    const double l0 = 0.5 * std::log(std::max(best, 1e-300));
    const double lp = 0.5 * std::log(std::max(std::norm(spectrum[k_peak + 1]), 1e-300));
    const double denom = lm - 2.0 * l0 + lp;
    if (denom < 0.0) delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
  }

  double f_hat = (static_cast<double>(k_peak) + delta) * bin_hz;
  double metric = std::norm(detail::window_correlation(y, f_hat, t_s));

  if (search.refine) {
    // golden-section maximization of the exact metric within +-1 bin
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::max(0.0, f_hat - bin_hz);
    double hi = std::min(sig.sample_rate_hz / 2.0, f_hat + bin_hz);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double j1 = std::norm(detail::window_correlation(y, x1, t_s));
    double j2 = std::norm(detail::window_correlation(y, x2, t_s));
    for (int it = 0; it < 50 && (hi - lo) > 1e-6 * bin_hz; ++it) {
      if (j1 < j2) {
        lo = x1;
        x1 = x2;
        j1 = j2;
        x2 = lo + gr * (hi - lo);
        j2 = std::norm(detail::window_correlation(y, x2, t_s));
      } else {
        hi = x2;
        x2 = x1;
        j2 = j1;
        x1 = hi - gr * (hi - lo);
        j1 = std::norm(detail::window_correlation(y, x1, t_s));
      }
    }
    const double f_ref = 0.5 * (lo + hi);
    const double m_ref = std::norm(detail::window_correlation(y, f_ref, t_s));
    // refinement must never lose to the grid point
    if (m_ref >= metric) {
      f_hat = f_ref;
      metric = m_ref;
    }
  }

  FreqEstimate est;
  est.f_hat_hz = f_hat;
  est.range_hat_m = speed_of_light * f_hat / (2.0 * sys.chirp_rate());
  const cplx corr = detail::window_correlation(y, f_hat, t_s);
  // arg(corr) is the phase at the window start; refer it to sample 0
  est.theta_hat_rad = std::arg(corr) - two_pi * f_hat * static_cast<double>(m0) * t_s;
  est.peak_metric = metric;
  est.grid_resolution_hz = bin_hz;
  est.fft_len = fft_len;
  est.window_start = m0;
  est.window_len = win;
  return est;
}

// Remove the estimated tone: samples[n] *= e^{-j(2 pi f_hat n T_s + theta_hat)}.
// Sample index n is the receiver-clock index (samples[0] is sample 0).
inline void compensate(BeatSignal& sig, const FreqEstimate& est) {
  const double t_s = 1.0 / sig.sample_rate_hz;
  const double dphi = -two_pi * est.f_hat_hz * t_s;
  const cplx rot{std::cos(dphi), std::sin(dphi)};
  cplx w{std::cos(-est.theta_hat_rad), std::sin(-est.theta_hat_rad)};
  for (auto& v : sig.samples) {
    v *= w;
    w *= rot;
  }
}

}  // namespace echoisac
