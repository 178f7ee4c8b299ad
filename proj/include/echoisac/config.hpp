#pragma once

// Configuration model for the echo-modulation ISAC toolkit.
//
// SystemConfig describes the radar geometry, chirp, sampling, and noise level;
// CpmConfig describes the continuous-phase modulation riding on the echo and
// the frame layout; ExperimentSpec describes a sweep to run. All three load
// from one INI file ([system] / [cpm] / [experiment]); an empty file yields
// the default 77 GHz / 100 MHz / 20 us operating point.

#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/ini.hpp"

namespace echoisac {

// Modulation index as a reduced fraction numerator/denominator.
struct RationalIndex {
  int num = 1;
  int den = 10;
};

// Best rational approximation with bounded denominator (Stern-Brocot walk).
// The phase trellis is finite only for rational h; we cap the denominator so
// the state space stays tractable.
inline RationalIndex rationalize_index(double h, int max_den = 64) {
  if (!(h > 0.0) || h > 1.0) throw config_error("modulation index must be in (0, 1]");
  int best_num = 1, best_den = 1;
  double best_err = std::abs(h - 1.0);
  for (int den = 1; den <= max_den; ++den) {
    const int num = static_cast<int>(std::lround(h * den));
    if (num < 1) continue;
    const double err = std::abs(h - static_cast<double>(num) / den);
    if (err < best_err - 1e-15) {
      best_err = err;
      best_num = num;
      best_den = den;
    }
  }
  if (best_err > 1e-6)
    throw config_error("modulation index is not a ratio K/P with P <= " + std::to_string(max_den));
  const int g = std::gcd(best_num, best_den);
  return {best_num / g, best_den / g};
}

struct ClutterComponent {
  double amplitude = 0.0;   // |mu_q| relative to unit noise std
  double range_m = 0.0;     // maps to a beat frequency via the chirp rate
  double doppler_hz = 0.0;  // f_D offset added to the beat frequency
};

struct SystemConfig {
  double carrier_hz = 77e9;          // f_c
  double sweep_bandwidth_hz = 100e6; // chirp sweep B
  double window_s = 20e-6;           // observation window T0
  double pri_s = 20e-6;              // pulse repetition interval
  double sample_rate_hz = 200e6;     // f_s
  double snr_sample_db = 10.0;       // per-sample SNR |mu_s|^2 / sigma_z^2
  double range_m = 10.0;             // target range R_s
  int array_x = 16;                  // reflecting-surface elements per axis
  int array_y = 16;
  double element_spacing_m = -1.0;   // element pitch; <0 means lambda/4
  std::vector<ClutterComponent> clutter;

  // Debug pin: freeze the aggregate carrier phase instead of drawing it
  // uniformly per realization.
  bool pin_theta = false;
  double theta_pin_rad = 0.0;

  double sample_period_s() const { return 1.0 / sample_rate_hz; }
  int n_samples() const { return static_cast<int>(std::llround(window_s * sample_rate_hz)); }
  double chirp_rate() const { return sweep_bandwidth_hz / pri_s; }  // kappa [Hz/s]
  double wavelength_m() const { return speed_of_light / carrier_hz; }
  double spacing_m() const { return element_spacing_m > 0 ? element_spacing_m : wavelength_m() / 4.0; }

  double delay_s() const { return range_m / speed_of_light; }          // one-way tau
  double beat_frequency_hz() const { return 2.0 * chirp_rate() * delay_s(); }
  // Residual video phase plus round-trip carrier phase.
  double carrier_phase_rad() const {
    const double tau = delay_s();
    return 4.0 * pi * chirp_rate() * tau * tau - 4.0 * pi * carrier_hz * tau;
  }

  double snr_sample_linear() const { return db_to_linear(snr_sample_db); }
  double snr_observation_linear() const { return snr_sample_linear() * n_samples(); }
  // Noise is normalized to unit per-sample variance; the echo amplitude
  // carries the SNR.
  double noise_variance() const { return 1.0; }
  double echo_amplitude() const { return std::sqrt(snr_sample_linear() * noise_variance()); }
};

struct CpmConfig {
  double h = 0.1;                    // modulation index
  int alphabet_size = 4;             // L
  double symbol_period_s = 55e-9;    // T_c
  int preamble_symbols = 8;          // L_p (symbols)
  int data_symbols = -1;             // L_d; -1 = fill the observation window
  double modulation_start_s = 0.0;   // receiver-clock time of the first symbol
  std::vector<int> preamble;         // empty = alternating +-(L-1)

  RationalIndex rational() const { return rationalize_index(h); }

  double symbol_variance() const {
    const double l = alphabet_size;
    return (l * l - 1.0) / 3.0;
  }

  int samples_per_symbol(const SystemConfig& sys) const {
    return static_cast<int>(std::llround(symbol_period_s * sys.sample_rate_hz));
  }

  // Symbols fitting fully in the observation window.
  int max_symbols(const SystemConfig& sys) const {
    return static_cast<int>(std::floor(sys.window_s / symbol_period_s + 1e-9));
  }

  int total_symbols(const SystemConfig& sys) const {
    if (data_symbols >= 0) return preamble_symbols + data_symbols;
    return max_symbols(sys);
  }

  int n_data_symbols(const SystemConfig& sys) const {
    return total_symbols(sys) - preamble_symbols;
  }

  // alphabet {-(L-1), -(L-3), ..., +(L-1)}
  std::vector<int> alphabet() const {
    std::vector<int> a(alphabet_size);
    for (int i = 0; i < alphabet_size; ++i) a[i] = -(alphabet_size - 1) + 2 * i;
    return a;
  }

  std::vector<int> preamble_pattern() const {
    if (!preamble.empty()) return preamble;
    std::vector<int> p(preamble_symbols);
    for (int i = 0; i < preamble_symbols; ++i)
      p[i] = (i % 2 == 0) ? (alphabet_size - 1) : -(alphabet_size - 1);
    return p;
  }

  int start_sample(const SystemConfig& sys) const {
    return static_cast<int>(std::llround(modulation_start_s * sys.sample_rate_hz));
  }
};

// Peak phase-slope constraint: the instantaneous frequency deviation of the
// modulation must stay within the half symbol rate, h*(L-1) <= 1.
struct PhaseConstraintReport {
  bool pass = false;
  int max_alphabet = 0;  // largest L admissible at this h
};

inline PhaseConstraintReport validate_phase_constraint(const CpmConfig& cpm) {
  PhaseConstraintReport r;
  r.max_alphabet = static_cast<int>(std::floor(1.0 / cpm.h + 1e-12)) + 1;
  r.pass = cpm.h * (cpm.alphabet_size - 1) <= 1.0 + 1e-12;
  return r;
}

inline void validate(const SystemConfig& sys) {
  if (sys.carrier_hz <= 0) throw config_error("carrier_hz must be positive");
  if (sys.sweep_bandwidth_hz <= 0) throw config_error("sweep_bandwidth_hz must be positive");
  if (sys.window_s <= 0) throw config_error("window_s must be positive");
  if (sys.pri_s < sys.window_s) throw config_error("pri_s must cover the observation window");
  if (sys.sample_rate_hz <= 0) throw config_error("sample_rate_hz must be positive");
  if (sys.n_samples() < 2) throw config_error("observation window holds fewer than 2 samples");
  if (sys.range_m < 0) throw config_error("range_m must be nonnegative");
  if (sys.array_x < 1 || sys.array_y < 1) throw config_error("array dimensions must be at least 1");
  // The beat tone must be representable at the configured sampling rate.
  if (sys.beat_frequency_hz() >= sys.sample_rate_hz / 2)
    throw config_error("beat frequency exceeds half the sampling rate");
  for (const auto& c : sys.clutter)
    if (c.amplitude < 0) throw config_error("clutter amplitude must be nonnegative");
}

inline void validate(const CpmConfig& cpm, const SystemConfig& sys) {
  if (cpm.alphabet_size < 2) throw config_error("alphabet_size must be at least 2");
  if (cpm.alphabet_size % 2 != 0) throw config_error("alphabet_size must be even");
  rationalize_index(cpm.h);  // throws if not K/P with P <= 64
  if (!validate_phase_constraint(cpm).pass)
    throw config_error("phase-slope constraint violated: h*(L-1) > 1");
  if (cpm.symbol_period_s <= 0) throw config_error("symbol_period_s must be positive");
  const double sps = cpm.symbol_period_s * sys.sample_rate_hz;
  if (std::abs(sps - std::llround(sps)) > 1e-6 * sps || std::llround(sps) < 1)
    throw config_error("symbol_period_s must be an integer number of samples");
  if (cpm.preamble_symbols < 1) throw config_error("preamble_symbols must be at least 1");
  if (cpm.total_symbols(sys) > cpm.max_symbols(sys))
    throw config_error("frame does not fit in the observation window");
  if (cpm.preamble_symbols > cpm.total_symbols(sys))
    throw config_error("preamble longer than the frame");
  if (cpm.modulation_start_s < 0) throw config_error("modulation_start_s must be nonnegative");
  const int m0 = cpm.start_sample(sys);
  if (m0 + cpm.total_symbols(sys) * cpm.samples_per_symbol(sys) > sys.n_samples())
    throw config_error("frame extends past the observation window");
  if (!cpm.preamble.empty()) {
    if (static_cast<int>(cpm.preamble.size()) != cpm.preamble_symbols)
      throw config_error("explicit preamble length must equal preamble_symbols");
    for (int b : cpm.preamble) {
      const bool odd_ok = (std::abs(b) % 2 == 1) && std::abs(b) <= cpm.alphabet_size - 1;
      if (!odd_ok) throw config_error("preamble symbol outside alphabet");
    }
  }
}

// Carson-rule helper: pick the symbol period so the modulation occupies a
// fraction beta of the sweep bandwidth, snapped to an integer number of
// samples. Returns the snapped config and the realized fraction.
struct BandwidthSplit {
  SystemConfig sys;  // chirp sweep reduced to the sensing share (1 - beta) of the budget
  CpmConfig cpm;     // symbol period set so the Carson bandwidth equals the comm share
  double beta_requested = 0.0;
  double beta_realized = 0.0;  // after snapping T_c to an integer number of samples
};

// Splits the total sweep budget of `total` between the chirp and the modulation.
// `total.sweep_bandwidth_hz` is interpreted as the full budget B_T; the returned
// system keeps (1 - beta)·B_T of chirp sweep while the modulation occupies
// beta·B_T of Carson bandwidth, i.e. (1 + h)/T_c = beta·B_T with T_c snapped to
// the sample grid.
inline BandwidthSplit cpm_for_bandwidth_fraction(const SystemConfig& total, CpmConfig base, double beta) {
  if (!(beta > 0.0) || beta >= 1.0) throw config_error("bandwidth fraction must be in (0, 1)");
  const double b_total = total.sweep_bandwidth_hz;
  const double bc = beta * b_total;                      // Carson bandwidth budget
  const double tc = (1.0 + base.h) / bc;                 // (1+h)/T_c = B_c
  const double sps = std::max(1.0, std::round(tc * total.sample_rate_hz));
  BandwidthSplit out;
  base.symbol_period_s = sps / total.sample_rate_hz;
  out.sys = total;
  out.sys.sweep_bandwidth_hz = (1.0 - beta) * b_total;
  out.cpm = base;
  out.beta_requested = beta;
  out.beta_realized = (1.0 + base.h) / base.symbol_period_s / b_total;
  return out;
}

// Experiment sweeps ----------------------------------------------------------

enum class ExperimentKind {
  McrbVsSnr,
  McrbVsBeta,
  Roc,
  PdVsSnr,
  RateVsSnr,
  Pareto,
  FullChain,
};

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::McrbVsSnr: return "mcrb_vs_snr";
    case ExperimentKind::McrbVsBeta: return "mcrb_vs_beta";
    case ExperimentKind::Roc: return "roc";
    case ExperimentKind::PdVsSnr: return "pd_vs_snr";
    case ExperimentKind::RateVsSnr: return "rate_vs_snr";
    case ExperimentKind::Pareto: return "pareto";
    case ExperimentKind::FullChain: return "full_chain";
  }
  throw config_error("unknown experiment kind");
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::McrbVsSnr, ExperimentKind::McrbVsBeta, ExperimentKind::Roc,
                 ExperimentKind::PdVsSnr, ExperimentKind::RateVsSnr, ExperimentKind::Pareto,
                 ExperimentKind::FullChain})
    if (to_string(k) == s) return k;
  throw config_error("unknown experiment kind: '" + s + "'");
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::McrbVsSnr;
  std::vector<double> snr_grid_db = {-10, -5, 0, 5, 10, 15, 20};
  std::vector<double> beta_grid = {0.1, 0.2, 0.5};
  std::vector<double> pfa_grid = {1e-3, 1e-2, 1e-1};
  std::vector<int> l_grid = {4, 8};    // alphabet sizes for rate sweeps
  std::vector<int> lp_grid = {2, 4, 8};  // preamble lengths for detection sweeps
  // Residual frequency offset injected in detection sweeps; negative means
  // "one sigma of the frequency-error bound at the operating SNR".
  double cfo_hz = -1.0;
  int n_trials = 1000;
  std::uint64_t seed = 1;
  std::string outdir = "out";
  double pfa_target = 1e-2;
  int n_threads = 1;
};

inline void validate(const ExperimentSpec& ex) {
  if (ex.n_trials < 1) throw config_error("n_trials must be at least 1");
  if (ex.n_threads < 1) throw config_error("n_threads must be at least 1");
  if (ex.outdir.empty()) throw config_error("outdir must not be empty");
  if (!(ex.pfa_target > 0) || ex.pfa_target >= 1) throw config_error("pfa_target must be in (0,1)");
  if (ex.snr_grid_db.empty() || ex.beta_grid.empty() || ex.pfa_grid.empty() ||
      ex.l_grid.empty() || ex.lp_grid.empty())
    throw config_error("experiment sweep grids must be non-empty");
  for (double p : ex.pfa_grid)
    if (!(p > 0) || p >= 1) throw config_error("pfa grid values must be in (0,1)");
  for (int l : ex.l_grid)
    if (l < 2) throw config_error("alphabet sizes must be at least 2");
  for (int lp : ex.lp_grid)
    if (lp < 1) throw config_error("preamble lengths must be at least 1");
}

struct Config {
  SystemConfig system;
  CpmConfig cpm;
  ExperimentSpec experiment;
};

inline void validate(const Config& cfg) {
  validate(cfg.system);
  validate(cfg.cpm, cfg.system);
  validate(cfg.experiment);
}

// INI binding ----------------------------------------------------------------

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& tok : split_list(s)) {
    if (tok.empty()) throw config_error("empty element in list for " + what);
    out.push_back(static_cast<int>(parse_int(tok, what)));
  }
  return out;
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw config_error("invalid boolean for " + what + ": '" + s + "'");
}

}  // namespace detail

inline Config config_from_ini(const IniDocument& doc) {
  Config cfg;
  std::vector<double> clutter_amp, clutter_range, clutter_dopp;
  for (const auto& [sec, kvs] : doc.sections) {
    if (sec == "system") {
      for (const auto& [key, val] : kvs) {
        if (key == "carrier_hz") cfg.system.carrier_hz = parse_double(val, key);
        else if (key == "sweep_bandwidth_hz") cfg.system.sweep_bandwidth_hz = parse_double(val, key);
        else if (key == "window_s") cfg.system.window_s = parse_double(val, key);
        else if (key == "pri_s") cfg.system.pri_s = parse_double(val, key);
        else if (key == "sample_rate_hz") cfg.system.sample_rate_hz = parse_double(val, key);
        else if (key == "snr_sample_db") cfg.system.snr_sample_db = parse_double(val, key);
        else if (key == "range_m") cfg.system.range_m = parse_double(val, key);
        else if (key == "array_x") cfg.system.array_x = static_cast<int>(parse_int(val, key));
        else if (key == "array_y") cfg.system.array_y = static_cast<int>(parse_int(val, key));
        else if (key == "element_spacing_m") cfg.system.element_spacing_m = parse_double(val, key);
        else if (key == "clutter_amplitude") clutter_amp = parse_double_list(val, key);
        else if (key == "clutter_range_m") clutter_range = parse_double_list(val, key);
        else if (key == "clutter_doppler_hz") clutter_dopp = parse_double_list(val, key);
        else if (key == "pin_theta") cfg.system.pin_theta = detail::parse_bool(val, key);
        else if (key == "theta_pin_rad") cfg.system.theta_pin_rad = parse_double(val, key);
        else throw config_error("unknown key in [system]: " + key);
      }
    } else if (sec == "cpm") {
      for (const auto& [key, val] : kvs) {
        if (key == "h") cfg.cpm.h = parse_double(val, key);
        else if (key == "alphabet_size") cfg.cpm.alphabet_size = static_cast<int>(parse_int(val, key));
        else if (key == "symbol_period_s") cfg.cpm.symbol_period_s = parse_double(val, key);
        else if (key == "preamble_symbols") cfg.cpm.preamble_symbols = static_cast<int>(parse_int(val, key));
        else if (key == "data_symbols") cfg.cpm.data_symbols = static_cast<int>(parse_int(val, key));
        else if (key == "modulation_start_s") cfg.cpm.modulation_start_s = parse_double(val, key);
        else if (key == "preamble") cfg.cpm.preamble = detail::parse_int_list(val, key);
        else throw config_error("unknown key in [cpm]: " + key);
      }
    } else if (sec == "experiment") {
      for (const auto& [key, val] : kvs) {
        if (key == "kind") cfg.experiment.kind = experiment_kind_from_string(val);
        else if (key == "snr_db") cfg.experiment.snr_grid_db = parse_double_list(val, key);
        else if (key == "beta") cfg.experiment.beta_grid = parse_double_list(val, key);
        else if (key == "pfa") cfg.experiment.pfa_grid = parse_double_list(val, key);
        else if (key == "alphabet_sizes") cfg.experiment.l_grid = detail::parse_int_list(val, key);
        else if (key == "preamble_lengths") cfg.experiment.lp_grid = detail::parse_int_list(val, key);
        else if (key == "cfo_hz") cfg.experiment.cfo_hz = parse_double(val, key);
        else if (key == "n_trials") cfg.experiment.n_trials = static_cast<int>(parse_int(val, key));
        else if (key == "seed") cfg.experiment.seed = static_cast<std::uint64_t>(parse_int(val, key));
        else if (key == "outdir") cfg.experiment.outdir = val;
        else if (key == "pfa_target") cfg.experiment.pfa_target = parse_double(val, key);
        else if (key == "n_threads") cfg.experiment.n_threads = static_cast<int>(parse_int(val, key));
        else throw config_error("unknown key in [experiment]: " + key);
      }
    } else {
      throw config_error("unknown section: [" + sec + "]");
    }
  }
  if (clutter_amp.size() != clutter_range.size() || clutter_amp.size() != clutter_dopp.size())
    throw config_error("clutter lists must have equal lengths");
  for (std::size_t i = 0; i < clutter_amp.size(); ++i)
    cfg.system.clutter.push_back({clutter_amp[i], clutter_range[i], clutter_dopp[i]});
  // explicit preamble defines its own length
  if (!cfg.cpm.preamble.empty())
    cfg.cpm.preamble_symbols = static_cast<int>(cfg.cpm.preamble.size());
  validate(cfg);
  return cfg;
}

inline Config load_config_text(const std::string& text) { return config_from_ini(parse_ini(text)); }

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

// Canonical serialization: fixed section and key order, shortest round-trip
// float formatting. dump(load(text)) is the normal form of `text`.
inline std::string dump_config(const Config& cfg) {
  std::ostringstream o;
  o << "[system]\n";
  o << "carrier_hz = " << format_double(cfg.system.carrier_hz) << "\n";
  o << "sweep_bandwidth_hz = " << format_double(cfg.system.sweep_bandwidth_hz) << "\n";
  o << "window_s = " << format_double(cfg.system.window_s) << "\n";
  o << "pri_s = " << format_double(cfg.system.pri_s) << "\n";
  o << "sample_rate_hz = " << format_double(cfg.system.sample_rate_hz) << "\n";
  o << "snr_sample_db = " << format_double(cfg.system.snr_sample_db) << "\n";
  o << "range_m = " << format_double(cfg.system.range_m) << "\n";
  o << "array_x = " << cfg.system.array_x << "\n";
  o << "array_y = " << cfg.system.array_y << "\n";
  o << "element_spacing_m = " << format_double(cfg.system.element_spacing_m) << "\n";
  if (!cfg.system.clutter.empty()) {
    std::vector<double> a, r, d;
    for (const auto& c : cfg.system.clutter) {
      a.push_back(c.amplitude);
      r.push_back(c.range_m);
      d.push_back(c.doppler_hz);
    }
    o << "clutter_amplitude = " << join_doubles(a) << "\n";
    o << "clutter_range_m = " << join_doubles(r) << "\n";
    o << "clutter_doppler_hz = " << join_doubles(d) << "\n";
  }
  o << "pin_theta = " << (cfg.system.pin_theta ? 1 : 0) << "\n";
  o << "theta_pin_rad = " << format_double(cfg.system.theta_pin_rad) << "\n";
  o << "\n[cpm]\n";
  o << "h = " << format_double(cfg.cpm.h) << "\n";
  o << "alphabet_size = " << cfg.cpm.alphabet_size << "\n";
  o << "symbol_period_s = " << format_double(cfg.cpm.symbol_period_s) << "\n";
  o << "preamble_symbols = " << cfg.cpm.preamble_symbols << "\n";
  o << "data_symbols = " << cfg.cpm.data_symbols << "\n";
  o << "modulation_start_s = " << format_double(cfg.cpm.modulation_start_s) << "\n";
  if (!cfg.cpm.preamble.empty()) {
    o << "preamble = ";
    for (std::size_t i = 0; i < cfg.cpm.preamble.size(); ++i)
      o << (i ? "," : "") << cfg.cpm.preamble[i];
    o << "\n";
  }
  o << "\n[experiment]\n";
  o << "kind = " << to_string(cfg.experiment.kind) << "\n";
  o << "snr_db = " << join_doubles(cfg.experiment.snr_grid_db) << "\n";
  o << "beta = " << join_doubles(cfg.experiment.beta_grid) << "\n";
  o << "pfa = " << join_doubles(cfg.experiment.pfa_grid) << "\n";
  o << "alphabet_sizes = ";
  for (std::size_t i = 0; i < cfg.experiment.l_grid.size(); ++i)
    o << (i ? "," : "") << cfg.experiment.l_grid[i];
  o << "\n";
  o << "preamble_lengths = ";
  for (std::size_t i = 0; i < cfg.experiment.lp_grid.size(); ++i)
    o << (i ? "," : "") << cfg.experiment.lp_grid[i];
  o << "\n";
  o << "cfo_hz = " << format_double(cfg.experiment.cfo_hz) << "\n";
  o << "n_trials = " << cfg.experiment.n_trials << "\n";
  o << "seed = " << cfg.experiment.seed << "\n";
  o << "outdir = " << cfg.experiment.outdir << "\n";
  o << "pfa_target = " << format_double(cfg.experiment.pfa_target) << "\n";
  o << "n_threads = " << cfg.experiment.n_threads << "\n";
  return o.str();
}

inline std::string normalize_config_text(const std::string& text) {
  return dump_config(load_config_text(text));
}

}  // namespace echoisac
