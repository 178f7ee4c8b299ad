#pragma once

// Deterministic random-number plumbing.
//
// Reproducibility contract: every Monte-Carlo trial draws from a stream whose
// seed is a pure function of (master seed, point index, trial index).  Results
// are therefore independent of scheduling order and of the number of worker
// threads, which is what makes byte-identical experiment reruns possible.

#include <cstdint>
#include <random>

#include "echoisac/common.hpp"

namespace echoisac {

// splitmix64: tiny, well-mixed 64-bit permutation. Used only to derive seeds;
// the actual variate generation uses std::mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Collapse an arbitrary-length index tuple into one well-mixed stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(master ^ 0x8000000000000000ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ (b + 0x9e3779b97f4a7c15ULL));
  return s;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unif_(engine_); }            // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }           // N(0,1)

  // Circularly-symmetric complex Gaussian with E|z|^2 = var.
  cplx complex_normal(double var) {
    const double s = std::sqrt(var / 2.0);
    return {s * normal(), s * normal()};
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream for one Monte-Carlo trial of one sweep point.
inline RngStream trial_stream(std::uint64_t master, std::uint64_t point, std::uint64_t trial) {
  return RngStream(derive_seed(master, point, trial));
}

}  // namespace echoisac
