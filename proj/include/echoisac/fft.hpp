#pragma once

// Iterative radix-2 FFT, power-of-two sizes only. This is all the spectral
// search needs (zero-padded to a power of two anyway); keeping it header-only
// avoids an external dependency in the core library.

#include <cstddef>
#include <vector>

#include "echoisac/common.hpp"

namespace echoisac {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

// Twiddle table exp(-j*pi*k/half) for k in [0, half). Cached per size;
// thread_local so parallel trials never contend or share mutable state.
inline const std::vector<cplx>& twiddles(std::size_t half) {
  thread_local std::vector<std::vector<cplx>> cache;  // indexed by log2(half)
  std::size_t log2h = 0;
  while ((std::size_t{1} << log2h) < half) ++log2h;
  if (cache.size() <= log2h) cache.resize(log2h + 1);
  auto& tab = cache[log2h];
  if (tab.size() != half) {
    tab.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = -pi * static_cast<double>(k) / static_cast<double>(half);
      tab[k] = {std::cos(ang), std::sin(ang)};
    }
  }
  return tab;
}

}  // namespace detail

// In-place forward FFT: X[k] = sum_n x[n] exp(-j 2 pi n k / N).
inline void fft_inplace(std::vector<cplx>& x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) throw config_error("fft size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const auto& tw = detail::twiddles(half);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx u = x[i + k];
        const cplx v = x[i + k + half] * tw[k];
        x[i + k] = u + v;
        x[i + k + half] = u - v;
      }
    }
  }
}

// Forward FFT of `x` zero-padded to `fft_len` (must be a power of two >= x.size()).
inline std::vector<cplx> fft_zero_padded(const std::vector<cplx>& x, std::size_t fft_len) {
  if (fft_len < x.size()) throw config_error("fft length shorter than input");
  std::vector<cplx> buf(fft_len, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft_inplace(buf);
  return buf;
}

}  // namespace echoisac
