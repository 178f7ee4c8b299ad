#pragma once

// Finite phase trellis for CP-FSK with rational modulation index h = K/P.
//
// Completed symbols advance the carrier phase by pi*h*b, so every reachable
// phase is an integer multiple of pi/P. States are indexed by that integer
// modulo 2P; a transition on symbol b moves u -> (u + K*b) mod 2P while the
// within-symbol trajectory interpolates linearly over N_sps samples.

#include <complex>
#include <stdexcept>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"

namespace echoisac {

struct CpmTrellis {
  int k_num = 1;   // K
  int p_den = 2;   // P
  int num_states = 4;  // 2P
  int n_sps = 1;
  std::vector<int> alphabet;
  // next_state[u][i]: state after emitting alphabet[i] from state u
  std::vector<std::vector<int>> next_state;
  // symbol_waveforms[i][s] = exp(j*pi*h*b_i*s/N_sps): the state-independent
  // part of the branch waveform (the state contributes a constant rotation)
  std::vector<std::vector<cplx>> symbol_waveforms;

  double state_phase(int u) const { return pi * static_cast<double>(u) / p_den; }

  int wrap_state(long long u) const {
    const long long m = static_cast<long long>(num_states);
    return static_cast<int>(((u % m) + m) % m);
  }

  // Full branch waveform for (state u, symbol index i): unit-modulus N_sps
  // samples of exp(j*(theta_u + 2*pi*h*b*g(t))).
  std::vector<cplx> branch_waveform(int u, int symbol_index) const {
    const cplx rot = std::polar(1.0, state_phase(u));
    std::vector<cplx> out(symbol_waveforms[symbol_index].size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = rot * symbol_waveforms[symbol_index][s];
    return out;
  }
};

inline CpmTrellis build_trellis(const CpmConfig& cpm, const SystemConfig& sys) {
  const RationalIndex r = cpm.rational();
  CpmTrellis t;
  t.k_num = r.num;
  t.p_den = r.den;
  t.num_states = 2 * r.den;
  t.n_sps = cpm.samples_per_symbol(sys);
  t.alphabet = cpm.alphabet();

  const int n_sym = static_cast<int>(t.alphabet.size());
  t.next_state.assign(t.num_states, std::vector<int>(n_sym));
  for (int u = 0; u < t.num_states; ++u)
    for (int i = 0; i < n_sym; ++i)
      t.next_state[u][i] =
          t.wrap_state(static_cast<long long>(u) + static_cast<long long>(t.k_num) * t.alphabet[i]);

  t.symbol_waveforms.assign(n_sym, std::vector<cplx>(t.n_sps));
  for (int i = 0; i < n_sym; ++i) {
    const double step = pi * cpm.h * t.alphabet[i] / t.n_sps;
    for (int s = 0; s < t.n_sps; ++s) t.symbol_waveforms[i][s] = std::polar(1.0, step * s);
  }
  return t;
}

// Phase state (in pi/P units, mod 2P) reached after the full preamble. The
// data trellis starts from this state.
inline int preamble_terminal_state(const CpmTrellis& t, const CpmConfig& cpm) {
  long long s = 0;
  for (int b : cpm.preamble_pattern()) s += b;
  return t.wrap_state(static_cast<long long>(t.k_num) * s);
}

// BFS over the transition graph: true when every state reaches every other
// state in at most max_steps transitions.
inline bool all_pairs_reachable_within(const CpmTrellis& t, int max_steps) {
  for (int src = 0; src < t.num_states; ++src) {
    std::vector<int> dist(t.num_states, -1);
    std::vector<int> frontier{src};
    dist[src] = 0;
    for (int step = 1; step <= max_steps && !frontier.empty(); ++step) {
      std::vector<int> next;
      for (int u : frontier)
        for (int v : t.next_state[u])
          if (dist[v] < 0) {
            dist[v] = step;
            next.push_back(v);
          }
      frontier = std::move(next);
    }
    for (int v = 0; v < t.num_states; ++v)
      if (dist[v] < 0 && v != src) return false;
  }
  return true;
}

}  // namespace echoisac
