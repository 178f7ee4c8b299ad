#pragma once

// Continuous-phase modulation of the reflected echo.
//
// Frequency pulse: rectangular over one symbol (CP-FSK). Phase pulse
//   g(t) = 0 (t < 0),  t/(2 T_c) (0 <= t < T_c),  1/2 (t >= T_c),
// so each symbol advances the carrier phase by exactly pi*h*b once complete,
// and the instantaneous frequency offset during a symbol is h*b/(2 T_c).

#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"

namespace echoisac {

// Normalized phase pulse and its slope.
inline double phase_pulse(double t, double t_c) {
  if (t <= 0.0) return 0.0;
  if (t >= t_c) return 0.5;
  return t / (2.0 * t_c);
}

inline double phase_pulse_slope(double t, double t_c) {
  // support [0, T_c): right-continuous at symbol boundaries
  if (t < 0.0 || t >= t_c) return 0.0;
  return 1.0 / (2.0 * t_c);
}

// Continuous-time modulation phase for an arbitrary start offset. Used by the
// synthesizer, where the modulation start need not be sample-aligned; phase
// continuity keeps time-quantization errors at the ulp level.
class CpmModulator {
 public:
  CpmModulator(std::vector<int> symbols, double h, double t_c, double t_start)
      : symbols_(std::move(symbols)), h_(h), t_c_(t_c), t_start_(t_start) {
    cumulative_.resize(symbols_.size() + 1, 0);
    for (std::size_t i = 0; i < symbols_.size(); ++i)
      cumulative_[i + 1] = cumulative_[i] + symbols_[i];
  }

  // gamma(t) [rad]
  double phase(double t) const {
    const double x = t - t_start_;
    if (x <= 0.0 || symbols_.empty()) return 0.0;
    const auto k = static_cast<long long>(std::floor(x / t_c_));
    if (k >= static_cast<long long>(symbols_.size()))
      return pi * h_ * static_cast<double>(cumulative_.back());
    const double frac = x - static_cast<double>(k) * t_c_;
    return pi * h_ * (static_cast<double>(cumulative_[k]) + symbols_[k] * frac / t_c_);
  }

  // d gamma / dt [rad/s]
  double phase_rate(double t) const {
    const double x = t - t_start_;
    if (x < 0.0 || symbols_.empty()) return 0.0;
    const auto k = static_cast<long long>(std::floor(x / t_c_));
    if (k >= static_cast<long long>(symbols_.size())) return 0.0;
    return pi * h_ * symbols_[k] / t_c_;
  }

  int n_symbols() const { return static_cast<int>(symbols_.size()); }

 private:
  std::vector<int> symbols_;
  double h_;
  double t_c_;
  double t_start_;
  std::vector<long long> cumulative_;
};

// Sample-grid modulation phase with exact integer symbol indexing. Receivers
// (correlators, trellis demod, Fisher sums) work on the sample grid where the
// symbol boundary of sample n must never depend on floating-point rounding.
class SampledCpm {
 public:
  // Modulation starts at sample m0; n_sps samples per symbol.
  SampledCpm(std::vector<int> symbols, double h, int n_sps, long long m0 = 0)
      : symbols_(std::move(symbols)), h_(h), n_sps_(n_sps), m0_(m0) {
    cumulative_.resize(symbols_.size() + 1, 0);
    for (std::size_t i = 0; i < symbols_.size(); ++i)
      cumulative_[i + 1] = cumulative_[i] + symbols_[i];
  }

  // gamma at sample n [rad]
  double phase_at(long long n) const {
    const long long x = n - m0_;
    if (x <= 0 || symbols_.empty()) return 0.0;
    const long long k = x / n_sps_;
    if (k >= static_cast<long long>(symbols_.size()))
      return pi * h_ * static_cast<double>(cumulative_.back());
    const long long s = x - k * n_sps_;
    return pi * h_ *
           (static_cast<double>(cumulative_[k]) +
            static_cast<double>(symbols_[k]) * static_cast<double>(s) / n_sps_);
  }

  // d gamma / dt at sample n [rad/s]; sample_period converts slope to time.
  double rate_at(long long n, double sample_period) const {
    const long long x = n - m0_;
    if (x < 0 || symbols_.empty()) return 0.0;
    const long long k = x / n_sps_;
    if (k >= static_cast<long long>(symbols_.size())) return 0.0;
    return pi * h_ * symbols_[k] / (n_sps_ * sample_period);
  }

 private:
  std::vector<int> symbols_;
  double h_;
  int n_sps_;
  long long m0_;
  std::vector<long long> cumulative_;
};

// Modulation phase over the preamble, one entry per sample, starting at the
// first preamble sample. This is the local replica the synchronizer and the
// data-aided frequency estimator correlate against.
inline std::vector<double> preamble_phase_table(const CpmConfig& cpm, const SystemConfig& sys) {
  const int n_sps = cpm.samples_per_symbol(sys);
  const SampledCpm mod(cpm.preamble_pattern(), cpm.h, n_sps, 0);
  std::vector<double> out(static_cast<std::size_t>(cpm.preamble_symbols) * n_sps);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = mod.phase_at(static_cast<long long>(n));
  return out;
}

// Terminal phase after the full preamble: pi*h*sum(b_p) [rad]. This is the
// phase state the data trellis starts from.
inline double preamble_terminal_phase(const CpmConfig& cpm) {
  long long s = 0;
  for (int b : cpm.preamble_pattern()) s += b;
  return pi * cpm.h * static_cast<double>(s);
}

}  // namespace echoisac
