#pragma once

// Data demodulation from the frequency-compensated beat signal.
//
// After compensation the signal over the frame is approximately
//   r[n] = A * exp(j*(eps_theta + gamma[n])) + z[n],
// with gamma the CP-FSK modulation phase. A single constant phase reference
// eps_theta is estimated from the known preamble and folded into the branch
// metrics; the data symbols are then recovered either by Viterbi
// maximum-likelihood sequence estimation over the phase trellis or by a
// decision-feedback correlator bank.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"
#include "echoisac/signal.hpp"
#include "echoisac/trellis.hpp"

namespace echoisac {

struct DemodResult {
  std::vector<int> decided_symbols;
  double path_metric = 0.0;
  int n_errors = -1;  // vs the synthesis ground truth; -1 when unavailable
  double ser = 0.0;
  double bit_rate_bps = 0.0;
};

struct RealizedRate {
  double bits_per_symbol = 0.0;
  double rate_bps = 0.0;
};

// R = (L_d / T_pri) * log2(L) * (1 - P_s), plus the per-symbol spectral
// efficiency used by the trade-off curves.
inline RealizedRate measure_rate(const DemodResult& res, const SystemConfig& sys,
                                 const CpmConfig& cpm) {
  RealizedRate out;
  out.bits_per_symbol = std::log2(static_cast<double>(cpm.alphabet_size)) * (1.0 - res.ser);
  out.rate_bps = static_cast<double>(cpm.n_data_symbols(sys)) / sys.pri_s * out.bits_per_symbol;
  return out;
}

// High-SNR union-bound approximation P_s ~= (L-1) Q(sqrt(rho_eff log2 L)).
inline double predicted_symbol_error_rate(int alphabet_size, double rho_eff) {
  const double p = (alphabet_size - 1) *
                   q_function(std::sqrt(std::max(0.0, rho_eff * std::log2(double(alphabet_size)))));
  return std::min(1.0, p);
}

inline double symbol_error_rate(const std::vector<int>& decided, const std::vector<int>& truth) {
  if (decided.size() != truth.size() || decided.empty()) return 0.0;
  int errors = 0;
  for (std::size_t i = 0; i < decided.size(); ++i) errors += decided[i] != truth[i];
  return static_cast<double>(errors) / static_cast<double>(decided.size());
}

// Gray bit labels over symbol indices (secondary output; SER is primary).
inline int gray_label(int index) { return index ^ (index >> 1); }

inline int symbol_index(int symbol, int alphabet_size) {
  return (symbol + alphabet_size - 1) / 2;
}

inline double bit_error_rate(const std::vector<int>& decided, const std::vector<int>& truth,
                             int alphabet_size) {
  if (decided.size() != truth.size() || decided.empty()) return 0.0;
  const double bits_per_symbol = std::log2(static_cast<double>(alphabet_size));
  long long bad = 0;
  for (std::size_t i = 0; i < decided.size(); ++i) {
    const unsigned x = static_cast<unsigned>(gray_label(symbol_index(decided[i], alphabet_size)) ^
                                             gray_label(symbol_index(truth[i], alphabet_size)));
    bad += std::popcount(x);
  }
  return static_cast<double>(bad) / (static_cast<double>(decided.size()) * bits_per_symbol);
}

namespace detail {

// corr[k][i] = sum_s r[start + k*N_sps + s] * conj(symbol_waveform_i[s])
inline std::vector<std::vector<cplx>> symbol_correlations(const std::vector<cplx>& r,
                                                          long long start, int n_symbols,
                                                          const CpmTrellis& t) {
  if (start < 0 ||
      start + static_cast<long long>(n_symbols) * t.n_sps > static_cast<long long>(r.size()))
    throw config_error("data frame extends past the end of the signal");
  const int n_sym = static_cast<int>(t.alphabet.size());
  std::vector<std::vector<cplx>> corr(n_symbols, std::vector<cplx>(n_sym));
  for (int k = 0; k < n_symbols; ++k) {
    const cplx* block = r.data() + start + static_cast<long long>(k) * t.n_sps;
    for (int i = 0; i < n_sym; ++i) {
      cplx acc{0.0, 0.0};
      const auto& w = t.symbol_waveforms[i];
      for (int s = 0; s < t.n_sps; ++s) acc += block[s] * std::conj(w[s]);
      corr[k][i] = acc;
    }
  }
  return corr;
}

// Constant phase reference from the known preamble replica.
inline double preamble_phase_reference(const std::vector<cplx>& r, long long frame_start,
                                       const CpmConfig& cpm, const SystemConfig& sys) {
  const auto table = preamble_phase_table(cpm, sys);
  if (frame_start < 0 ||
      frame_start + static_cast<long long>(table.size()) > static_cast<long long>(r.size()))
    throw config_error("preamble extends past the end of the signal");
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n < table.size(); ++n)
    acc += r[frame_start + static_cast<long long>(n)] * std::polar(1.0, -table[n]);
  return std::arg(acc);
}

inline void score_result(DemodResult& res, const BeatSignal& sig, const SystemConfig& sys,
                         const CpmConfig& cpm) {
  if (sig.truth.data_symbols.size() == res.decided_symbols.size() &&
      !res.decided_symbols.empty()) {
    int errors = 0;
    for (std::size_t i = 0; i < res.decided_symbols.size(); ++i)
      errors += res.decided_symbols[i] != sig.truth.data_symbols[i];
    res.n_errors = errors;
    res.ser = static_cast<double>(errors) / static_cast<double>(res.decided_symbols.size());
  }
  res.bit_rate_bps = measure_rate(res, sys, cpm).rate_bps;
}

}  // namespace detail

// Maximum-likelihood sequence estimation: accumulate Re{r . conj(branch)} per
// branch, keep one survivor per phase state, trace back the full frame. Ties
// resolve toward the smaller symbol value (and smaller source state).
inline DemodResult viterbi_demod(const BeatSignal& sig, const SystemConfig& sys,
                                 const CpmConfig& cpm, const CpmTrellis& t,
                                 long long frame_start) {
  const int n_data = cpm.n_data_symbols(sys);
  const int n_sym = static_cast<int>(t.alphabet.size());
  const double ref = detail::preamble_phase_reference(sig.samples, frame_start, cpm, sys);
  const long long data_start =
      frame_start + static_cast<long long>(cpm.preamble_symbols) * t.n_sps;
  const auto corr = detail::symbol_correlations(sig.samples, data_start, n_data, t);

  const double neg = -std::numeric_limits<double>::infinity();
  std::vector<double> metric(t.num_states, neg);
  metric[preamble_terminal_state(t, cpm)] = 0.0;

  std::vector<cplx> state_rot(t.num_states);
  for (int u = 0; u < t.num_states; ++u) state_rot[u] = std::polar(1.0, -(t.state_phase(u) + ref));

  std::vector<std::vector<int>> bp_state(n_data, std::vector<int>(t.num_states, -1));
  std::vector<std::vector<int>> bp_symbol(n_data, std::vector<int>(t.num_states, -1));
  std::vector<double> next_metric(t.num_states);

  for (int k = 0; k < n_data; ++k) {
    std::fill(next_metric.begin(), next_metric.end(), neg);
    for (int u = 0; u < t.num_states; ++u) {
      if (metric[u] == neg) continue;
      for (int i = 0; i < n_sym; ++i) {
        const double m = metric[u] + std::real(state_rot[u] * corr[k][i]);
        const int v = t.next_state[u][i];
        if (m > next_metric[v]) {
          next_metric[v] = m;
          bp_state[k][v] = u;
          bp_symbol[k][v] = i;
        }
      }
    }
    metric.swap(next_metric);
  }

  int best = 0;
  for (int u = 1; u < t.num_states; ++u)
    if (metric[u] > metric[best]) best = u;

  DemodResult res;
  res.path_metric = metric[best];
  res.decided_symbols.resize(n_data);
  int u = best;
  for (int k = n_data - 1; k >= 0; --k) {
    res.decided_symbols[k] = t.alphabet[bp_symbol[k][u]];
    u = bp_state[k][u];
  }
  detail::score_result(res, sig, sys, cpm);
  return res;
}

// Brute-force reference: scores every one of the L^{L_d} symbol sequences with
// the same branch metric as the Viterbi search. Only viable for short frames;
// kept as an independent check of the trellis recursion.
inline DemodResult exhaustive_search_demod(const BeatSignal& sig, const SystemConfig& sys,
                                           const CpmConfig& cpm, const CpmTrellis& t,
                                           long long frame_start) {
  const int n_data = cpm.n_data_symbols(sys);
  const int n_sym = static_cast<int>(t.alphabet.size());
  double n_seq = std::pow(static_cast<double>(n_sym), n_data);
  if (n_seq > 20e6) throw config_error("exhaustive search is limited to ~2e7 sequences");

  const double ref = detail::preamble_phase_reference(sig.samples, frame_start, cpm, sys);
  const long long data_start =
      frame_start + static_cast<long long>(cpm.preamble_symbols) * t.n_sps;
  const auto corr = detail::symbol_correlations(sig.samples, data_start, n_data, t);
  const int u0 = preamble_terminal_state(t, cpm);

  std::vector<cplx> state_rot(t.num_states);
  for (int u = 0; u < t.num_states; ++u) state_rot[u] = std::polar(1.0, -(t.state_phase(u) + ref));

  std::vector<int> idx(n_data, 0), best_idx;
  double best_metric = -std::numeric_limits<double>::infinity();
  while (true) {
    double m = 0.0;
    int u = u0;
    for (int k = 0; k < n_data; ++k) {
      m += std::real(state_rot[u] * corr[k][idx[k]]);
      u = t.next_state[u][idx[k]];
    }
    if (m > best_metric) {  // strict: first (lexicographically smallest) wins ties
      best_metric = m;
      best_idx = idx;
    }
    int k = n_data - 1;
    while (k >= 0 && idx[k] == n_sym - 1) idx[k--] = 0;
    if (k < 0) break;
    ++idx[k];
  }

  DemodResult res;
  res.path_metric = best_metric;
  res.decided_symbols.resize(n_data);
  for (int k = 0; k < n_data; ++k) res.decided_symbols[k] = t.alphabet[best_idx[k]];
  detail::score_result(res, sig, sys, cpm);
  return res;
}

// Reduced-complexity detector: one symbol at a time, correlating against the
// L hypothesis waveforms rotated by the phase state implied by previous
// decisions (decision feedback), picking the largest in-phase component.
inline DemodResult correlator_demod(const BeatSignal& sig, const SystemConfig& sys,
                                    const CpmConfig& cpm, const CpmTrellis& t,
                                    long long frame_start) {
  const int n_data = cpm.n_data_symbols(sys);
  const int n_sym = static_cast<int>(t.alphabet.size());
  const double ref = detail::preamble_phase_reference(sig.samples, frame_start, cpm, sys);
  const long long data_start =
      frame_start + static_cast<long long>(cpm.preamble_symbols) * t.n_sps;
  const auto corr = detail::symbol_correlations(sig.samples, data_start, n_data, t);

  DemodResult res;
  res.decided_symbols.resize(n_data);
  int u = preamble_terminal_state(t, cpm);
  double total = 0.0;
  for (int k = 0; k < n_data; ++k) {
    const cplx rot = std::polar(1.0, -(t.state_phase(u) + ref));
    int best = 0;
    double best_m = std::real(rot * corr[k][0]);
    for (int i = 1; i < n_sym; ++i) {
      const double m = std::real(rot * corr[k][i]);
      if (m > best_m) {
        best_m = m;
        best = i;
      }
    }
    total += best_m;
    res.decided_symbols[k] = t.alphabet[best];
    u = t.next_state[u][best];
  }
  res.path_metric = total;
  detail::score_result(res, sig, sys, cpm);
  return res;
}

}  // namespace echoisac
