#pragma once

// Experiment runners: every CSV the toolkit emits is produced here from a
// validated Config, with seeded Monte Carlo that is reproducible bit-for-bit
// across reruns and across thread counts. Each grid point derives its trials
// from (master seed, point index, trial index), trials are striped over
// worker threads into preallocated slots, and aggregation walks the slots in
// index order, so scheduling never changes a result.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "echoisac/bounds.hpp"
#include "echoisac/config.hpp"
#include "echoisac/cpm.hpp"
#include "echoisac/csv.hpp"
#include "echoisac/demod.hpp"
#include "echoisac/estimation.hpp"
#include "echoisac/glrt.hpp"
#include "echoisac/pareto.hpp"
#include "echoisac/rng.hpp"
#include "echoisac/signal.hpp"
#include "echoisac/trellis.hpp"
#include "echoisac/version.hpp"

namespace echoisac {

// Run bookkeeping --------------------------------------------------------------

struct RunRecord {
  std::string experiment;
  std::string config_hash;
  std::string outdir;
  std::vector<std::string> files;                 // emitted CSVs, in order
  std::map<std::string, std::string> figures;     // file -> what the curve shows
  std::vector<std::string> failures;              // per-point errors (run continued)
  double wall_time_s = 0.0;
  std::string version = version_string;
};

inline std::uint64_t fnv1a_hash(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const Config& cfg) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a_hash(dump_config(cfg));
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

// Confidence intervals ----------------------------------------------------------

struct IntervalEstimate {
  double value = 0.0;
  double half_width = 0.0;  // 95% normal-approximation half width
};

inline IntervalEstimate mean_ci(const std::vector<double>& xs) {
  IntervalEstimate out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.value = sum / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.value) * (x - out.value);
  const double var = ss / static_cast<double>(n - 1);
  out.half_width = 1.96 * std::sqrt(var / static_cast<double>(n));
  return out;
}

inline IntervalEstimate proportion_ci(long long hits, long long n) {
  IntervalEstimate out;
  if (n <= 0) return out;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  out.value = p;
  out.half_width = 1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
  return out;
}

// Deterministic parallel trial execution ----------------------------------------
//
// kernel(i) must depend only on i (it derives its RNG stream internally), so
// the slot vector is identical for any worker count.

template <typename T, typename Kernel>
std::vector<T> run_trials(int n_trials, int n_threads, Kernel&& kernel) {
  std::vector<T> slots(static_cast<std::size_t>(n_trials));
  const int workers = std::max(1, std::min(n_threads, n_trials));
  if (workers == 1) {
    for (int i = 0; i < n_trials; ++i) slots[static_cast<std::size_t>(i)] = kernel(i);
    return slots;
  }
  std::vector<std::string> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n_trials; i += workers) {
        try {
          slots[static_cast<std::size_t>(i)] = kernel(i);
        } catch (const std::exception& e) {
          if (errors[static_cast<std::size_t>(w)].empty())
            errors[static_cast<std::size_t>(w)] = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error(err);
  return slots;
}

namespace detail {

// The ranging sweeps run the estimator in its best-supported configuration:
// the known preamble fills the whole frame, so the data-aided window covers
// every sample and the bound comparison is window-matched.
inline BandwidthSplit ranging_split(const Config& cfg, double beta) {
  BandwidthSplit split = cpm_for_bandwidth_fraction(cfg.system, cfg.cpm, beta);
  split.cpm.preamble_symbols = split.cpm.max_symbols(split.sys);
  split.cpm.data_symbols = 0;
  validate(split.cpm, split.sys);
  return split;
}

struct RangingPoint {
  IntervalEstimate mse;  // squared delay error [s^2]
  double mean_error_s = 0.0;
};

inline RangingPoint ranging_trials(const SystemConfig& sys, const CpmConfig& cpm,
                                   const ExperimentSpec& ex, std::uint64_t point_id) {
  const double kappa = sys.chirp_rate();
  auto kernel = [&](int trial) {
    RngStream rng = trial_stream(ex.seed, point_id, static_cast<std::uint64_t>(trial));
    const BeatSignal sig = synthesize_beat(sys, cpm, rng);
    const FreqEstimate est = estimate_beat_frequency(sig, sys, cpm);
    return est.f_hat_hz / (2.0 * kappa) - sig.truth.delay_s;
  };
  const std::vector<double> errs = run_trials<double>(ex.n_trials, ex.n_threads, kernel);
  std::vector<double> sq(errs.size());
  double mean_err = 0.0;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    sq[i] = errs[i] * errs[i];
    mean_err += errs[i];
  }
  RangingPoint out;
  out.mse = mean_ci(sq);
  out.mean_error_s = errs.empty() ? 0.0 : mean_err / static_cast<double>(errs.size());
  return out;
}

inline void record_failure(RunRecord& rec, const std::string& where, const std::exception& e) {
  rec.failures.push_back(where + ": " + e.what());
}

inline void emit(RunRecord& rec, const std::filesystem::path& outdir, const CsvTable& table,
                 const std::string& name, const std::string& figure) {
  table.write((outdir / name).string());
  rec.files.push_back(name);
  rec.figures[name] = figure;
}

}  // namespace detail

// Ranging error versus SNR, one curve per bandwidth split -----------------------

inline void run_mcrb_vs_snr(const Config& cfg, RunRecord& rec,
                            const std::filesystem::path& outdir) {
  CsvTable table({"snr_db", "beta", "mse_simulated_s2", "mcrb_s2", "n_trials",
                  "mse_ci_s2", "beta_realized", "mean_error_s"});
  std::uint64_t point_id = 0;
  for (double beta : cfg.experiment.beta_grid) {
    BandwidthSplit split;
    try {
      split = detail::ranging_split(cfg, beta);
    } catch (const std::exception& e) {
      detail::record_failure(rec, "mse_vs_snr beta=" + format_double(beta), e);
      point_id += cfg.experiment.snr_grid_db.size();
      continue;
    }
    for (double snr_db : cfg.experiment.snr_grid_db) {
      const std::uint64_t id = point_id++;
      SystemConfig sys = split.sys;
      sys.snr_sample_db = snr_db;
      try {
        const auto pt = detail::ranging_trials(sys, split.cpm, cfg.experiment, id);
        table.begin_row()
            .cell(snr_db)
            .cell(beta)
            .cell(pt.mse.value)
            .cell(mcrb_tau(sys, split.cpm))
            .cell(cfg.experiment.n_trials)
            .cell(pt.mse.half_width)
            .cell(split.beta_realized)
            .cell(pt.mean_error_s);
      } catch (const std::exception& e) {
        detail::record_failure(
            rec, "mse_vs_snr beta=" + format_double(beta) + " snr=" + format_double(snr_db), e);
      }
    }
  }
  detail::emit(rec, outdir, table, "mse_vs_snr.csv",
               "ranging mean-square error versus per-sample SNR with the delay bound overlay");
}

// Ranging error versus bandwidth split, one curve per SNR ------------------------

inline void run_mcrb_vs_beta(const Config& cfg, RunRecord& rec,
                             const std::filesystem::path& outdir) {
  CsvTable table({"beta", "snr_db", "mse", "mcrb", "n_trials", "mse_ci", "beta_realized"});
  std::uint64_t point_id = 0;
  for (double snr_db : cfg.experiment.snr_grid_db) {
    for (double beta : cfg.experiment.beta_grid) {
      const std::uint64_t id = point_id++;
      try {
        const BandwidthSplit split = detail::ranging_split(cfg, beta);
        SystemConfig sys = split.sys;
        sys.snr_sample_db = snr_db;
        const auto pt = detail::ranging_trials(sys, split.cpm, cfg.experiment, id);
        table.begin_row()
            .cell(beta)
            .cell(snr_db)
            .cell(pt.mse.value)
            .cell(mcrb_tau(sys, split.cpm))
            .cell(cfg.experiment.n_trials)
            .cell(pt.mse.half_width)
            .cell(split.beta_realized);
      } catch (const std::exception& e) {
        detail::record_failure(
            rec, "mse_vs_beta snr=" + format_double(snr_db) + " beta=" + format_double(beta), e);
      }
    }
  }
  detail::emit(rec, outdir, table, "mse_vs_beta.csv",
               "ranging mean-square error versus bandwidth fraction with the delay bound overlay");
}

// Detector operating characteristic ----------------------------------------------

namespace detail {

struct DetectionDraw {
  double stat_aligned = 0.0;  // window on the preamble
  double stat_tone = 0.0;     // window on the bare tone ahead of the frame
};

// One aligned and one tone-only statistic per trial. The tone-only window is
// placed immediately before the modulation start, where the echo is an
// unmodulated beat tone; both windows share the trial's noise stream.
inline DetectionDraw detection_draw(const SystemConfig& sys, const CpmConfig& cpm,
                                    double f_demix_offset_hz, std::uint64_t seed,
                                    std::uint64_t point_id, int trial) {
  const int l_p = cpm.preamble_symbols * cpm.samples_per_symbol(sys);
  const long long m0 = cpm.start_sample(sys);
  DetectionDraw out;
  // The two windows consume independent, deterministic randomness: the
  // tone-only stream offsets the point id into a reserved half-space.
  RngStream rng_h1 = trial_stream(seed, point_id, static_cast<std::uint64_t>(trial));
  {
    SynthOptions opt;
    opt.first_sample = m0;
    opt.n_samples = l_p;
    const BeatSignal sig = synthesize_beat(sys, cpm, rng_h1, opt);
    const double f_demix = sig.truth.beat_frequency_hz - f_demix_offset_hz;
    out.stat_aligned = glrt_statistic(correlate(sig, f_demix, cpm, sys, 0));
  }
  RngStream rng_h0 = trial_stream(seed, point_id + (1ull << 32), static_cast<std::uint64_t>(trial));
  {
    SynthOptions opt;
    opt.first_sample = m0 - l_p;
    opt.n_samples = l_p;
    const BeatSignal sig = synthesize_beat(sys, cpm, rng_h0, opt);
    out.stat_tone = glrt_statistic(correlate(sig, sig.truth.beat_frequency_hz, cpm, sys, 0));
  }
  return out;
}

}  // namespace detail

inline void run_roc(const Config& cfg, RunRecord& rec, const std::filesystem::path& outdir) {
  CsvTable table({"pfa", "pd", "snr_db", "beta", "L_p", "threshold", "pd_simulated", "pd_ci",
                  "pfa_simulated", "pfa_ci", "n_trials"});
  std::uint64_t point_id = 0;
  for (double beta : cfg.experiment.beta_grid) {
    for (int l_p : cfg.experiment.lp_grid) {
      for (double snr_db : cfg.experiment.snr_grid_db) {
        const std::uint64_t id = point_id++;
        const std::string where = "roc beta=" + format_double(beta) +
                                  " L_p=" + std::to_string(l_p) +
                                  " snr=" + format_double(snr_db);
        try {
          BandwidthSplit split = cpm_for_bandwidth_fraction(cfg.system, cfg.cpm, beta);
          split.cpm.preamble_symbols = l_p;
          SystemConfig sys = split.sys;
          sys.snr_sample_db = snr_db;
          validate(split.cpm, sys);
          const GlrtModel model = build_model(sys, split.cpm);
          auto kernel = [&](int trial) {
            return detail::detection_draw(sys, split.cpm, 0.0, cfg.experiment.seed, id, trial);
          };
          const auto draws = run_trials<detail::DetectionDraw>(cfg.experiment.n_trials,
                                                               cfg.experiment.n_threads, kernel);
          for (double pfa : cfg.experiment.pfa_grid) {
            const double eta = solve_threshold(model, pfa);
            const DetectionPoint analytic = pd_pfa(model, eta);
            long long hits1 = 0, hits0 = 0;
            for (const auto& d : draws) {
              hits1 += d.stat_aligned > eta ? 1 : 0;
              hits0 += d.stat_tone > eta ? 1 : 0;
            }
            const auto pd_sim = proportion_ci(hits1, cfg.experiment.n_trials);
            const auto pfa_sim = proportion_ci(hits0, cfg.experiment.n_trials);
            table.begin_row()
                .cell(analytic.pfa)
                .cell(analytic.pd)
                .cell(snr_db)
                .cell(beta)
                .cell(l_p)
                .cell(eta)
                .cell(pd_sim.value)
                .cell(pd_sim.half_width)
                .cell(pfa_sim.value)
                .cell(pfa_sim.half_width)
                .cell(cfg.experiment.n_trials);
          }
        } catch (const std::exception& e) {
          detail::record_failure(rec, where, e);
        }
      }
    }
  }
  detail::emit(rec, outdir, table, "roc.csv",
               "detector operating characteristic, analytic versus Monte Carlo");
}

// Detection probability versus SNR, with and without residual frequency offset ---

inline void run_pd_vs_snr(const Config& cfg, RunRecord& rec,
                          const std::filesystem::path& outdir) {
  CsvTable table({"snr_db", "pd_ideal", "pd_cfo_analytic", "pd_simulated", "L_p",
                  "pd_cfo_approx", "pd_ci", "cfo_hz", "threshold", "pfa_target", "n_trials"});
  std::uint64_t point_id = 0;
  for (int l_p : cfg.experiment.lp_grid) {
    for (double snr_db : cfg.experiment.snr_grid_db) {
      const std::uint64_t id = point_id++;
      const std::string where =
          "pd_vs_snr L_p=" + std::to_string(l_p) + " snr=" + format_double(snr_db);
      try {
        CpmConfig cpm = cfg.cpm;
        cpm.preamble_symbols = l_p;
        SystemConfig sys = cfg.system;
        sys.snr_sample_db = snr_db;
        validate(cpm, sys);
        const GlrtModel ideal = build_model(sys, cpm);
        const double eta = solve_threshold(ideal, cfg.experiment.pfa_target);
        const double pd_ideal = pd_pfa(ideal, eta).pd;
        const double cfo = cfg.experiment.cfo_hz >= 0.0
                               ? cfg.experiment.cfo_hz
                               : std::sqrt(freq_error_variance(sys, cpm));
        const GlrtModel offset = build_model(sys, cpm, cfo);
        const double pd_cfo = pd_pfa(offset, eta).pd;
        const double pd_apx = pd_cfo_approx(pd_ideal, cfo, ideal.l_p_samples,
                                            sys.sample_period_s());
        auto kernel = [&](int trial) {
          return detail::detection_draw(sys, cpm, cfo, cfg.experiment.seed, id, trial)
                     .stat_aligned > eta
                     ? 1
                     : 0;
        };
        const auto hits =
            run_trials<int>(cfg.experiment.n_trials, cfg.experiment.n_threads, kernel);
        long long n_hit = 0;
        for (int h : hits) n_hit += h;
        const auto pd_sim = proportion_ci(n_hit, cfg.experiment.n_trials);
        table.begin_row()
            .cell(snr_db)
            .cell(pd_ideal)
            .cell(pd_cfo)
            .cell(pd_sim.value)
            .cell(l_p)
            .cell(pd_apx)
            .cell(pd_sim.half_width)
            .cell(cfo)
            .cell(eta)
            .cell(cfg.experiment.pfa_target)
            .cell(cfg.experiment.n_trials);
      } catch (const std::exception& e) {
        detail::record_failure(rec, where, e);
      }
    }
  }
  detail::emit(rec, outdir, table, "pd_vs_snr.csv",
               "detection probability versus SNR, ideal and with residual frequency offset");
}

// Symbol error rate and spectral efficiency versus SNR ---------------------------

namespace detail {

struct DemodDraw {
  long long viterbi_errors = 0;
  long long correlator_errors = 0;
  long long n_symbols = 0;
};

}  // namespace detail

inline void run_rate_vs_snr(const Config& cfg, RunRecord& rec,
                            const std::filesystem::path& outdir) {
  CsvTable ser({"snr_db", "L", "beta", "ser_viterbi", "ser_correlator", "ser_theory",
                "ser_viterbi_ci", "ser_correlator_ci", "n_symbols", "n_trials"});
  CsvTable rate({"snr_db", "L", "beta", "eta_shannon", "eta_unconstrained",
                 "eta_measured_viterbi", "eta_measured_correlator", "r_max", "xi"});
  std::uint64_t point_id = 0;
  for (int l : cfg.experiment.l_grid) {
    for (double beta : cfg.experiment.beta_grid) {
      const std::string where_cfg = "rate_vs_snr L=" + std::to_string(l) +
                                    " beta=" + format_double(beta);
      BandwidthSplit split;
      CpmTrellis trellis;
      try {
        CpmConfig base = cfg.cpm;
        base.alphabet_size = l;
        split = cpm_for_bandwidth_fraction(cfg.system, base, beta);
        validate(split.cpm, split.sys);
        trellis = build_trellis(split.cpm, split.sys);
      } catch (const std::exception& e) {
        detail::record_failure(rec, where_cfg, e);
        point_id += cfg.experiment.snr_grid_db.size();
        continue;
      }
      for (double snr_db : cfg.experiment.snr_grid_db) {
        const std::uint64_t id = point_id++;
        SystemConfig sys = split.sys;
        sys.snr_sample_db = snr_db;
        const CpmConfig& cpm = split.cpm;
        try {
          auto kernel = [&](int trial) {
            RngStream rng = trial_stream(cfg.experiment.seed, id,
                                         static_cast<std::uint64_t>(trial));
            BeatSignal sig = synthesize_beat(sys, cpm, rng);
            const FreqEstimate est = estimate_beat_frequency(sig, sys, cpm);
            compensate(sig, est);
            const long long m0 = sig.truth.frame_start_sample;
            detail::DemodDraw d;
            d.n_symbols = cpm.n_data_symbols(sys);
            d.viterbi_errors = viterbi_demod(sig, sys, cpm, trellis, m0).n_errors;
            d.correlator_errors = correlator_demod(sig, sys, cpm, trellis, m0).n_errors;
            return d;
          };
          const auto draws = run_trials<detail::DemodDraw>(cfg.experiment.n_trials,
                                                           cfg.experiment.n_threads, kernel);
          long long err_v = 0, err_c = 0, n_sym = 0;
          for (const auto& d : draws) {
            err_v += d.viterbi_errors;
            err_c += d.correlator_errors;
            n_sym += d.n_symbols;
          }
          const auto ser_v = proportion_ci(err_v, n_sym);
          const auto ser_c = proportion_ci(err_c, n_sym);
          const CouplingReport rep = effective_rate(sys, cpm);
          const double bits = std::log2(static_cast<double>(l));
          ser.begin_row()
              .cell(snr_db)
              .cell(l)
              .cell(beta)
              .cell(ser_v.value)
              .cell(ser_c.value)
              .cell(predicted_symbol_error_rate(l, rep.sinr_eff))
              .cell(ser_v.half_width)
              .cell(ser_c.half_width)
              .cell(n_sym)
              .cell(cfg.experiment.n_trials);
          rate.begin_row()
              .cell(snr_db)
              .cell(l)
              .cell(beta)
              .cell(rep.eta_bits_per_symbol)
              .cell(std::log2(1.0 + rep.rho_symbol))
              .cell(bits * (1.0 - ser_v.value))
              .cell(bits * (1.0 - ser_c.value))
              .cell(static_cast<double>(cpm.n_data_symbols(sys)) / sys.pri_s * bits)
              .cell(rep.xi);
        } catch (const std::exception& e) {
          detail::record_failure(rec, where_cfg + " snr=" + format_double(snr_db), e);
        }
      }
    }
  }
  detail::emit(rec, outdir, ser, "ser_vs_snr.csv",
               "symbol error rate versus SNR, trellis and correlator receivers");
  detail::emit(rec, outdir, rate, "rate_vs_snr.csv",
               "spectral efficiency versus SNR with the alphabet ceiling");
}

// Closed-form trade-off sweeps (no Monte Carlo) ----------------------------------

inline void run_pareto(const Config& cfg, RunRecord& rec, const std::filesystem::path& outdir) {
  CsvTable frontier({"beta", "s_norm", "c_norm", "L"});
  for (int l : cfg.experiment.l_grid) {
    CpmConfig cpm = cfg.cpm;
    cpm.alphabet_size = l;
    const FisherCoefficients fc = fisher_coefficients(cfg.system, cpm);
    for (const TradeoffPoint& p : pareto_frontier(1.0 / fc.ratio_ab, 1001)) {
      frontier.begin_row().cell(p.beta).cell(p.sensing_norm).cell(p.comm_norm).cell(l);
    }
  }
  detail::emit(rec, outdir, frontier, "pareto.csv",
               "sensing-communication trade-off frontier per alphabet size");

  CsvTable sweep({"snr_db", "beta", "mcrb", "crb_sensing_only", "beta_realized"});
  for (double snr_db : cfg.experiment.snr_grid_db) {
    for (double beta : cfg.experiment.beta_grid) {
      try {
        const BandwidthSplit split = cpm_for_bandwidth_fraction(cfg.system, cfg.cpm, beta);
        SystemConfig sys = split.sys;
        sys.snr_sample_db = snr_db;
        validate(split.cpm, sys);
        sweep.begin_row()
            .cell(snr_db)
            .cell(beta)
            .cell(mcrb_tau(sys, split.cpm))
            .cell(crb_sensing_only(sys))
            .cell(split.beta_realized);
      } catch (const std::exception& e) {
        detail::record_failure(
            rec, "mcrb_sweep snr=" + format_double(snr_db) + " beta=" + format_double(beta), e);
      }
    }
  }
  detail::emit(rec, outdir, sweep, "mcrb_sweep.csv",
               "delay bound versus bandwidth fraction and SNR");

  CsvTable coupling({"snr_db", "xi", "sinr_eff", "eta_eff", "rate_bps", "beta", "phase_var"});
  for (double beta : cfg.experiment.beta_grid) {
    for (double snr_db : cfg.experiment.snr_grid_db) {
      try {
        const BandwidthSplit split = cpm_for_bandwidth_fraction(cfg.system, cfg.cpm, beta);
        SystemConfig sys = split.sys;
        sys.snr_sample_db = snr_db;
        validate(split.cpm, sys);
        const CouplingReport rep = effective_rate(sys, split.cpm);
        coupling.begin_row()
            .cell(snr_db)
            .cell(rep.xi)
            .cell(rep.sinr_eff)
            .cell(rep.eta_eff)
            .cell(rep.rate_bps)
            .cell(beta)
            .cell(rep.phase_var);
      } catch (const std::exception& e) {
        detail::record_failure(
            rec, "coupling snr=" + format_double(snr_db) + " beta=" + format_double(beta), e);
      }
    }
  }
  detail::emit(rec, outdir, coupling, "coupling.csv",
               "estimation-to-demodulation coupling loss versus SNR");
}

// End-to-end chain: estimate, compensate, synchronize, demodulate ----------------

namespace detail {

struct ChainDraw {
  double freq_error_hz = 0.0;
  double lambda = 0.0;
  int synced = 0;  // detected and at the true frame start
  long long viterbi_errors = 0;
  long long correlator_errors = 0;
  long long n_symbols = 0;
};

}  // namespace detail

inline void run_full_chain(const Config& cfg, RunRecord& rec,
                           const std::filesystem::path& outdir) {
  CsvTable table({"snr_db", "freq_rmse_hz", "sync_rate", "ser_viterbi", "ser_correlator",
                  "eta_measured", "eta_predicted", "rate_bps", "lambda_mean", "threshold",
                  "n_trials"});
  std::uint64_t point_id = 0;
  CpmTrellis trellis;
  try {
    validate(cfg.cpm, cfg.system);
    trellis = build_trellis(cfg.cpm, cfg.system);
  } catch (const std::exception& e) {
    detail::record_failure(rec, "full_chain config", e);
    detail::emit(rec, outdir, table, "chain.csv", "end-to-end chain summary versus SNR");
    return;
  }
  for (double snr_db : cfg.experiment.snr_grid_db) {
    const std::uint64_t id = point_id++;
    SystemConfig sys = cfg.system;
    sys.snr_sample_db = snr_db;
    const CpmConfig& cpm = cfg.cpm;
    try {
      const GlrtModel model = build_model(sys, cpm);
      const double eta = solve_threshold(model, cfg.experiment.pfa_target);
      auto kernel = [&](int trial) {
        RngStream rng =
            trial_stream(cfg.experiment.seed, id, static_cast<std::uint64_t>(trial));
        BeatSignal sig = synthesize_beat(sys, cpm, rng);
        detail::ChainDraw d;
        d.n_symbols = cpm.n_data_symbols(sys);
        const FreqEstimate est = estimate_beat_frequency(sig, sys, cpm);
        d.freq_error_hz = est.f_hat_hz - sig.truth.beat_frequency_hz;
        compensate(sig, est);
        const SyncResult sync = synchronize(sig, 0.0, cpm, sys, eta);
        d.lambda = sync.lambda_max;
        const long long m0 = sig.truth.frame_start_sample;
        if (sync.detected && sync.m_hat == m0) {
          d.synced = 1;
          d.viterbi_errors = viterbi_demod(sig, sys, cpm, trellis, m0).n_errors;
          d.correlator_errors = correlator_demod(sig, sys, cpm, trellis, m0).n_errors;
        } else {
          d.viterbi_errors = d.n_symbols;  // lost frame: every symbol counts as an error
          d.correlator_errors = d.n_symbols;
        }
        return d;
      };
      const auto draws = run_trials<detail::ChainDraw>(cfg.experiment.n_trials,
                                                       cfg.experiment.n_threads, kernel);
      long long err_v = 0, err_c = 0, n_sym = 0, synced = 0;
      double sq_freq = 0.0, lambda_sum = 0.0;
      for (const auto& d : draws) {
        err_v += d.viterbi_errors;
        err_c += d.correlator_errors;
        n_sym += d.n_symbols;
        synced += d.synced;
        sq_freq += d.freq_error_hz * d.freq_error_hz;
        lambda_sum += d.lambda;
      }
      const double n_trials = static_cast<double>(draws.size());
      const double ser_v = n_sym > 0 ? static_cast<double>(err_v) / n_sym : 0.0;
      const double ser_c = n_sym > 0 ? static_cast<double>(err_c) / n_sym : 0.0;
      const CouplingReport rep = effective_rate(sys, cpm);
      const double bits = std::log2(static_cast<double>(cpm.alphabet_size));
      const double eta_measured = bits * (1.0 - ser_v);
      const double eta_predicted =
          bits * (1.0 - predicted_symbol_error_rate(cpm.alphabet_size, rep.sinr_eff));
      table.begin_row()
          .cell(snr_db)
          .cell(std::sqrt(sq_freq / n_trials))
          .cell(static_cast<double>(synced) / n_trials)
          .cell(ser_v)
          .cell(ser_c)
          .cell(eta_measured)
          .cell(eta_predicted)
          .cell(static_cast<double>(cpm.n_data_symbols(sys)) / sys.pri_s * eta_measured)
          .cell(lambda_sum / n_trials)
          .cell(eta)
          .cell(cfg.experiment.n_trials);
    } catch (const std::exception& e) {
      detail::record_failure(rec, "full_chain snr=" + format_double(snr_db), e);
    }
  }
  detail::emit(rec, outdir, table, "chain.csv", "end-to-end chain summary versus SNR");
}

// Dispatch -----------------------------------------------------------------------

inline void write_manifest(const RunRecord& rec, const std::filesystem::path& outdir,
                           const Config& cfg) {
  nlohmann::json j;
  j["experiment"] = rec.experiment;
  j["config_hash"] = rec.config_hash;
  j["version"] = rec.version;
  j["seed"] = cfg.experiment.seed;
  j["n_trials"] = cfg.experiment.n_trials;
  j["n_threads"] = cfg.experiment.n_threads;
  j["files"] = rec.files;
  j["figures"] = rec.figures;
  j["failures"] = rec.failures;
  j["wall_time_s"] = rec.wall_time_s;
  std::ofstream out(outdir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open manifest for writing");
  out << j.dump(2) << "\n";
}

inline RunRecord run_experiment(const Config& cfg) {
  validate(cfg.system);
  validate(cfg.experiment);
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.experiment = to_string(cfg.experiment.kind);
  rec.config_hash = config_hash(cfg);
  rec.outdir = cfg.experiment.outdir;
  const std::filesystem::path outdir(cfg.experiment.outdir);
  std::filesystem::create_directories(outdir);

  switch (cfg.experiment.kind) {
    case ExperimentKind::McrbVsSnr:
      run_mcrb_vs_snr(cfg, rec, outdir);
      break;
    case ExperimentKind::McrbVsBeta:
      run_mcrb_vs_beta(cfg, rec, outdir);
      break;
    case ExperimentKind::Roc:
      run_roc(cfg, rec, outdir);
      break;
    case ExperimentKind::PdVsSnr:
      run_pd_vs_snr(cfg, rec, outdir);
      break;
    case ExperimentKind::RateVsSnr:
      run_rate_vs_snr(cfg, rec, outdir);
      break;
    case ExperimentKind::Pareto:
      run_pareto(cfg, rec, outdir);
      break;
    case ExperimentKind::FullChain:
      run_full_chain(cfg, rec, outdir);
      break;
  }

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(rec, outdir, cfg);
  return rec;
}

}  // namespace echoisac
