#pragma once

// Shared numeric primitives: physical constants, dB conversions, and the
// Gaussian tail function used by the uncoded error-rate predictions.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace echoisac {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Speed of light [m/s]; exact by SI definition.
inline constexpr double speed_of_light = 299'792'458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Gaussian tail probability Q(x) = P(N(0,1) > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Error type for contract violations (bad configuration, malformed input,
// infeasible request). Runtime numerical failures use std::runtime_error.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace echoisac
