// Command-line front end: analytic queries (mcrb, pareto), single-shot
// processing stages (estimate, sync, demod, chain), and the full experiment
// runner (run). Every subcommand accepts --config/--seed/--out; numbers are
// printed with round-trip formatting so traces are reproducible.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "echoisac/bounds.hpp"
#include "echoisac/config.hpp"
#include "echoisac/demod.hpp"
#include "echoisac/estimation.hpp"
#include "echoisac/experiment.hpp"
#include "echoisac/glrt.hpp"
#include "echoisac/pareto.hpp"
#include "echoisac/signal.hpp"
#include "echoisac/signal_io.hpp"
#include "echoisac/trellis.hpp"

namespace {

using namespace echoisac;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> outdir;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "INI configuration file");
  sub->add_option("--seed", opts.seed, "master random seed");
  sub->add_option("--out", opts.outdir, "output directory");
}

Config make_config(const CommonOpts& opts) {
  Config cfg = opts.config_path.empty() ? Config{} : load_config(opts.config_path);
  if (opts.seed) cfg.experiment.seed = *opts.seed;
  if (opts.outdir) cfg.experiment.outdir = *opts.outdir;
  validate(cfg);
  return cfg;
}

void print_kv(const std::string& key, double v) {
  std::cout << key << " = " << format_double(v) << "\n";
}

void print_kv(const std::string& key, long long v) { std::cout << key << " = " << v << "\n"; }

// Either load a recorded signal or synthesize a fresh one from the config.
BeatSignal obtain_signal(const Config& cfg, const std::string& in_path) {
  if (!in_path.empty()) return read_signal(in_path);
  RngStream rng = trial_stream(cfg.experiment.seed, 0, 0);
  return synthesize_beat(cfg.system, cfg.cpm, rng);
}

int cmd_mcrb(const CommonOpts& opts, double snr_db, double beta) {
  Config cfg = make_config(opts);
  SystemConfig sys = cfg.system;
  CpmConfig cpm = cfg.cpm;
  if (beta > 0.0 && beta < 1.0) {
    const BandwidthSplit split = cpm_for_bandwidth_fraction(cfg.system, cfg.cpm, beta);
    sys = split.sys;
    cpm = split.cpm;
    print_kv("beta_realized", split.beta_realized);
  }
  if (!std::isnan(snr_db)) sys.snr_sample_db = snr_db;
  validate(cpm, sys);
  const double bound = mcrb_tau(sys, cpm);
  print_kv("mcrb_tau_s2", bound);
  print_kv("range_std_m", speed_of_light * std::sqrt(bound));
  print_kv("freq_std_hz", std::sqrt(freq_error_variance(sys, cpm)));
  return 0;
}

int cmd_pareto(const CommonOpts& opts, double h, int l) {
  Config cfg = make_config(opts);
  if (h > 0.0) cfg.cpm.h = h;
  if (l > 0) cfg.cpm.alphabet_size = l;
  cfg.experiment.kind = ExperimentKind::Pareto;
  cfg.experiment.l_grid = {cfg.cpm.alphabet_size};
  validate(cfg);
  const FisherCoefficients fc = fisher_coefficients(cfg.system, cfg.cpm);
  print_kv("a", fc.a);
  print_kv("b", fc.b);
  print_kv("a_over_b", fc.ratio_ab);
  const RunRecord rec = run_experiment(cfg);
  std::cout << "frontier_csv = " << cfg.experiment.outdir << "/pareto.csv\n";
  for (const auto& f : rec.failures) std::cerr << "error: " << f << "\n";
  return 0;
}

int cmd_estimate(const CommonOpts& opts, const std::string& in_path) {
  Config cfg = make_config(opts);
  const BeatSignal sig = obtain_signal(cfg, in_path);
  const FreqEstimate est = estimate_beat_frequency(sig, cfg.system, cfg.cpm);
  print_kv("f_hat_hz", est.f_hat_hz);
  print_kv("range_hat_m", est.range_hat_m);
  print_kv("theta_hat_rad", est.theta_hat_rad);
  print_kv("grid_resolution_hz", est.grid_resolution_hz);
  if (sig.truth.beat_frequency_hz != 0.0) {
    print_kv("f_true_hz", sig.truth.beat_frequency_hz);
    print_kv("freq_error_hz", est.f_hat_hz - sig.truth.beat_frequency_hz);
  }
  return 0;
}

int cmd_sync(const CommonOpts& opts, const std::string& in_path, double pfa) {
  Config cfg = make_config(opts);
  BeatSignal sig = obtain_signal(cfg, in_path);
  const FreqEstimate est = estimate_beat_frequency(sig, cfg.system, cfg.cpm);
  compensate(sig, est);
  const GlrtModel model = build_model(cfg.system, cfg.cpm);
  const double eta = solve_threshold(model, pfa);
  const SyncResult res = synchronize(sig, 0.0, cfg.cpm, cfg.system, eta);
  print_kv("threshold", eta);
  print_kv("lambda", res.lambda_max);
  print_kv("m_hat", res.m_hat);
  std::cout << "detected = " << (res.detected ? "true" : "false") << "\n";
  print_kv("m0_true", sig.truth.frame_start_sample);
  return 0;
}

int cmd_demod(const CommonOpts& opts, const std::string& in_path) {
  Config cfg = make_config(opts);
  BeatSignal sig = obtain_signal(cfg, in_path);
  const FreqEstimate est = estimate_beat_frequency(sig, cfg.system, cfg.cpm);
  compensate(sig, est);
  const CpmTrellis trellis = build_trellis(cfg.cpm, cfg.system);
  const long long m0 = sig.truth.frame_start_sample;
  const DemodResult vit = viterbi_demod(sig, cfg.system, cfg.cpm, trellis, m0);
  const DemodResult cor = correlator_demod(sig, cfg.system, cfg.cpm, trellis, m0);
  print_kv("n_data_symbols", static_cast<long long>(vit.decided_symbols.size()));
  if (vit.n_errors >= 0) {
    print_kv("ser_viterbi", vit.ser);
    print_kv("ser_correlator", cor.ser);
  }
  print_kv("rate_viterbi_bps", vit.bit_rate_bps);
  print_kv("rate_correlator_bps", cor.bit_rate_bps);
  return 0;
}

int cmd_run(const CommonOpts& opts, const std::string& kind) {
  Config cfg = make_config(opts);
  if (!kind.empty()) cfg.experiment.kind = experiment_kind_from_string(kind);
  const RunRecord rec = run_experiment(cfg);
  std::cout << "experiment = " << rec.experiment << "\n";
  std::cout << "config_hash = " << rec.config_hash << "\n";
  for (const auto& f : rec.files) std::cout << "wrote " << rec.outdir << "/" << f << "\n";
  std::cout << "wrote " << rec.outdir << "/manifest.json\n";
  for (const auto& f : rec.failures) std::cerr << "error: " << f << "\n";
  return 0;
}

int cmd_chain(const CommonOpts& opts, const std::string& dump_path, double pfa) {
  Config cfg = make_config(opts);
  RngStream rng = trial_stream(cfg.experiment.seed, 0, 0);
  BeatSignal sig = synthesize_beat(cfg.system, cfg.cpm, rng);
  if (!dump_path.empty()) {
    write_signal(dump_path, sig);
    std::cout << "wrote " << dump_path << "\n";
  }
  print_kv("f_tau_true_hz", sig.truth.beat_frequency_hz);
  const FreqEstimate est = estimate_beat_frequency(sig, cfg.system, cfg.cpm);
  print_kv("f_tau_hat_hz", est.f_hat_hz);
  print_kv("freq_error_hz", est.f_hat_hz - sig.truth.beat_frequency_hz);
  print_kv("range_hat_m", est.range_hat_m);
  compensate(sig, est);
  const GlrtModel model = build_model(cfg.system, cfg.cpm);
  const double eta = solve_threshold(model, pfa);
  const SyncResult sync = synchronize(sig, 0.0, cfg.cpm, cfg.system, eta);
  print_kv("threshold", eta);
  print_kv("lambda", sync.lambda_max);
  print_kv("m0_true", sig.truth.frame_start_sample);
  print_kv("m0_hat", sync.m_hat);
  std::cout << "detected = " << (sync.detected ? "true" : "false") << "\n";
  const CpmTrellis trellis = build_trellis(cfg.cpm, cfg.system);
  const long long m0 = sig.truth.frame_start_sample;
  const DemodResult vit = viterbi_demod(sig, cfg.system, cfg.cpm, trellis, m0);
  const DemodResult cor = correlator_demod(sig, cfg.system, cfg.cpm, trellis, m0);
  print_kv("ser_viterbi", vit.ser);
  print_kv("ser_correlator", cor.ser);
  print_kv("rate_viterbi_bps", vit.bit_rate_bps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"echo-modulated chirp sensing/communication toolkit"};
  app.require_subcommand(1);

  CommonOpts mcrb_opts;
  double mcrb_snr = std::nan("");
  double mcrb_beta = -1.0;
  auto* mcrb_cmd = app.add_subcommand("mcrb", "delay bound and range accuracy at a config");
  add_common(mcrb_cmd, mcrb_opts);
  mcrb_cmd->add_option("--snr-db", mcrb_snr, "per-sample SNR in dB");
  mcrb_cmd->add_option("--beta", mcrb_beta, "bandwidth fraction for the modulation");

  CommonOpts pareto_opts;
  double pareto_h = -1.0;
  int pareto_l = -1;
  auto* pareto_cmd = app.add_subcommand("pareto", "trade-off coefficients and frontier CSV");
  add_common(pareto_cmd, pareto_opts);
  pareto_cmd->add_option("--mod-index", pareto_h, "modulation index");
  pareto_cmd->add_option("--L", pareto_l, "alphabet size");

  CommonOpts est_opts;
  std::string est_in;
  auto* est_cmd = app.add_subcommand("estimate", "beat-frequency estimate for one signal");
  add_common(est_cmd, est_opts);
  est_cmd->add_option("--in", est_in, "recorded signal file (synthesized when absent)");

  CommonOpts sync_opts;
  std::string sync_in;
  double sync_pfa = 1e-2;
  auto* sync_cmd = app.add_subcommand("sync", "frame-start detection for one signal");
  add_common(sync_cmd, sync_opts);
  sync_cmd->add_option("--in", sync_in, "recorded signal file (synthesized when absent)");
  sync_cmd->add_option("--pfa", sync_pfa, "false-alarm target for the threshold");

  CommonOpts demod_opts;
  std::string demod_in;
  auto* demod_cmd = app.add_subcommand("demod", "demodulate one signal at the known frame start");
  add_common(demod_cmd, demod_opts);
  demod_cmd->add_option("--in", demod_in, "recorded signal file (synthesized when absent)");

  CommonOpts run_opts;
  std::string run_kind;
  auto* run_cmd = app.add_subcommand("run", "full experiment sweep from the config");
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--kind", run_kind,
                      "experiment kind (mcrb_vs_snr, mcrb_vs_beta, roc, pd_vs_snr, "
                      "rate_vs_snr, pareto, full_chain)");

  CommonOpts chain_opts;
  std::string chain_dump;
  double chain_pfa = 1e-2;
  auto* chain_cmd = app.add_subcommand("chain", "one end-to-end trial with a verbose trace");
  add_common(chain_cmd, chain_opts);
  chain_cmd->add_option("--dump", chain_dump, "write the synthesized signal to this file");
  chain_cmd->add_option("--pfa", chain_pfa, "false-alarm target for the threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (mcrb_cmd->parsed()) return cmd_mcrb(mcrb_opts, mcrb_snr, mcrb_beta);
    if (pareto_cmd->parsed()) return cmd_pareto(pareto_opts, pareto_h, pareto_l);
    if (est_cmd->parsed()) return cmd_estimate(est_opts, est_in);
    if (sync_cmd->parsed()) return cmd_sync(sync_opts, sync_in, sync_pfa);
    if (demod_cmd->parsed()) return cmd_demod(demod_opts, demod_in);
    if (run_cmd->parsed()) return cmd_run(run_opts, run_kind);
    if (chain_cmd->parsed()) return cmd_chain(chain_opts, chain_dump, chain_pfa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
