#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "echoisac/glrt.hpp"
#include "echoisac/rng.hpp"

using namespace echoisac;
using Catch::Approx;

namespace {

SystemConfig at_snr(double snr_db) {
  SystemConfig sys;
  sys.snr_sample_db = snr_db;
  return sys;
}

}  // namespace

TEST_CASE("statistic is the correlator energy difference", "[glrt]") {
  CorrelatorPair c;
  c.preamble = {3.0, 4.0};
  c.plain = {1.0, 2.0};
  CHECK(glrt_statistic(c) == Approx(20.0).epsilon(1e-15));
}

TEST_CASE("model geometry at the default preamble", "[glrt]") {
  // Frozen sums over the 88-sample alternating preamble.
  SystemConfig sys;
  CpmConfig cpm;
  const auto m = build_model(sys, cpm);

  CHECK(m.l_p_samples == 88);
  CHECK(m.sigma2 == Approx(88.0).epsilon(1e-15));
  CHECK(m.amplitude == Approx(std::sqrt(10.0)).epsilon(1e-14));
  CHECK(m.gamma_p.real() == Approx(75.49242823982803).margin(1e-9));
  CHECK(m.gamma_p.imag() == Approx(38.46531343232429).margin(1e-9));
  CHECK(std::abs(m.nu_c) == Approx(0.9628083290487292).margin(1e-12));
  // nu_c and the covariance cross term are both conj(gamma_p) scaled
  CHECK(m.nu_c.real() == Approx(m.gamma_p.real() / 88.0).epsilon(1e-14));
  CHECK(m.nu_c.imag() == Approx(-m.gamma_p.imag() / 88.0).epsilon(1e-14));
  CHECK(m.cov_cross.real() == Approx(m.gamma_p.real()).epsilon(1e-14));
  CHECK(m.cov_cross.imag() == Approx(-m.gamma_p.imag()).epsilon(1e-14));

  // aligned: stripping is perfectly coherent; misaligned: the roles swap
  CHECK(m.mean_h1[0].real() == Approx(88.0 * m.amplitude).epsilon(1e-12));
  CHECK(m.mean_h1[0].imag() == Approx(0.0).margin(1e-9));
  CHECK(m.mean_h1[1].real() == Approx(m.amplitude * m.gamma_p.real()).epsilon(1e-12));
  CHECK(m.mean_h1[1].imag() == Approx(m.amplitude * m.gamma_p.imag()).epsilon(1e-12));
  CHECK(m.mean_h0[0].real() == Approx(m.amplitude * m.gamma_p.real()).epsilon(1e-12));
  CHECK(m.mean_h0[0].imag() == Approx(-m.amplitude * m.gamma_p.imag()).epsilon(1e-12));
  CHECK(m.mean_h0[1].real() == Approx(88.0 * m.amplitude).epsilon(1e-12));
}

TEST_CASE("coherence factor is the Dirichlet sum", "[glrt]") {
  const cplx at_zero = coherence_factor(0.0, 88, 5e-9);
  CHECK(at_zero.real() == Approx(88.0).epsilon(1e-15));
  CHECK(at_zero.imag() == Approx(0.0).margin(1e-12));

  const cplx at_10k = coherence_factor(1e4, 88, 5e-9);
  CHECK(at_10k.real() == Approx(87.98898100298332).margin(1e-9));
  CHECK(at_10k.imag() == Approx(1.2025259441880283).margin(1e-9));

  const cplx neg = coherence_factor(-1e4, 88, 5e-9);
  CHECK(neg.real() == Approx(at_10k.real()).epsilon(1e-12));
  CHECK(neg.imag() == Approx(-at_10k.imag()).epsilon(1e-12));

  for (double eps : {1e3, 5e4, 2e5, 1e6})
    CHECK(std::abs(coherence_factor(eps, 88, 5e-9)) <= 88.0 + 1e-9);
}

TEST_CASE("residual frequency offset shifts the correlator means", "[glrt]") {
  SystemConfig sys;
  CpmConfig cpm;
  const auto m = build_model(sys, cpm, 1e4);
  CHECK(m.eps_f_hz == 1e4);
  CHECK(m.mean_h1[0].real() == Approx(278.2455889667141).margin(1e-9));
  CHECK(m.mean_h1[0].imag() == Approx(3.8027209290786894).margin(1e-9));
  CHECK(m.mean_h1[1].real() == Approx(237.0168601663355).margin(1e-9));
  CHECK(m.mean_h1[1].imag() == Approx(124.87864538168694).margin(1e-9));
  // role exchange between hypotheses
  CHECK(m.mean_h0[0].real() == Approx(m.mean_h1[1].real()).epsilon(1e-14));
  CHECK(m.mean_h0[0].imag() == Approx(-m.mean_h1[1].imag()).epsilon(1e-14));
  CHECK(m.mean_h0[1].real() == Approx(m.mean_h1[0].real()).epsilon(1e-14));
  CHECK(m.mean_h0[1].imag() == Approx(m.mean_h1[0].imag()).epsilon(1e-14));
}

TEST_CASE("aligned noiseless correlation hits the model mean", "[glrt]") {
  SystemConfig sys;
  sys.pin_theta = true;
  sys.theta_pin_rad = 0.3;
  CpmConfig cpm;
  RngStream rng(4);
  const auto sig = synthesize_beat(sys, cpm, rng, {false, false});
  const auto c = correlate(sig, sig.truth.beat_frequency_hz, cpm, sys, 0);

  const double a = sig.truth.amplitude;
  const cplx ref{std::cos(0.3), std::sin(0.3)};
  CHECK(c.preamble.real() == Approx(88.0 * a * ref.real()).margin(1e-6));
  CHECK(c.preamble.imag() == Approx(88.0 * a * ref.imag()).margin(1e-6));
  const cplx gp{75.49242823982803, 38.46531343232429};
  const cplx c0 = a * ref * gp;
  CHECK(c.plain.real() == Approx(c0.real()).margin(1e-6));
  CHECK(c.plain.imag() == Approx(c0.imag()).margin(1e-6));
  // the realized statistic equals the noiseless separation
  CHECK(glrt_statistic(c) == Approx(5653.1294100746945).margin(1e-4));
}

TEST_CASE("correlation window must stay inside the record", "[glrt]") {
  SystemConfig sys;
  CpmConfig cpm;
  RngStream rng(6);
  const auto sig = synthesize_beat(sys, cpm, rng);
  CHECK_THROWS_AS(correlate(sig, 0.0, cpm, sys, -1), config_error);
  CHECK_THROWS_AS(correlate(sig, 0.0, cpm, sys, 3913), config_error);
  CHECK_NOTHROW(correlate(sig, 0.0, cpm, sys, 3912));
}

TEST_CASE("statistic CDF matches the frozen inversion tables", "[glrt]") {
  CpmConfig cpm;

  SECTION("low SNR") {
    const auto m = build_model(at_snr(-3.0), cpm);
    const double etas[] = {0.0, 70.83190725930771, 141.66381451861542};
    const double f1[] = {0.10147113934145136, 0.1709249809609379, 0.2651718480631903};
    const double f0[] = {0.8985288606585486, 0.9445687381346728, 0.9721089557621171};
    for (int i = 0; i < 3; ++i) {
      const auto r1 = cdf_lambda(m, etas[i], Hypothesis::preamble_aligned);
      const auto r0 = cdf_lambda(m, etas[i], Hypothesis::tone_only);
      REQUIRE(r1.converged);
      REQUIRE(r0.converged);
      CHECK(r1.value == Approx(f1[i]).margin(5e-6));
      CHECK(r0.value == Approx(f0[i]).margin(5e-6));
    }
  }

  SECTION("high SNR") {
    const auto m = build_model(at_snr(10.0), cpm);
    const auto r1 = cdf_lambda(m, 2826.5647050373473, Hypothesis::preamble_aligned);
    REQUIRE(r1.converged);
    CHECK(r1.value == Approx(0.0021782504692665627).margin(5e-6));
    const auto r1z = cdf_lambda(m, 0.0, Hypothesis::preamble_aligned);
    REQUIRE(r1z.converged);
    CHECK(r1z.value == Approx(7.1499972054134275e-09).margin(2e-6));
    const auto r0z = cdf_lambda(m, 0.0, Hypothesis::tone_only);
    REQUIRE(r0z.converged);
    CHECK(r0z.value == Approx(0.9999999928500027).margin(2e-6));
  }
}

TEST_CASE("hypothesis exchange flips the statistic's sign", "[glrt]") {
  CpmConfig cpm;
  const auto m = build_model(at_snr(-3.0), cpm);
  for (double eta : {-200.0, -50.0, 0.0, 80.0, 300.0}) {
    const auto f1 = cdf_lambda(m, eta, Hypothesis::preamble_aligned);
    const auto f0 = cdf_lambda(m, -eta, Hypothesis::tone_only);
    REQUIRE(f1.converged);
    REQUIRE(f0.converged);
    CHECK(f1.value + f0.value == Approx(1.0).margin(5e-6));
  }
}

TEST_CASE("threshold calibration pins the false-alarm rate", "[glrt]") {
  CpmConfig cpm;

  SECTION("low SNR") {
    const auto m = build_model(at_snr(-3.0), cpm);
    const double eta = solve_threshold(m, 1e-2);
    CHECK(eta == Approx(234.9433273775503).margin(0.01));
    const auto pt = pd_pfa(m, eta);
    REQUIRE(pt.converged);
    CHECK(pt.pfa == Approx(0.01).margin(1e-5));
    CHECK(pt.pd == Approx(0.580704624885184).margin(1e-4));
  }

  SECTION("high SNR") {
    const auto m = build_model(at_snr(10.0), cpm);
    const double eta = solve_threshold(m, 1e-2);
    CHECK(eta == Approx(-3344.02815438807).margin(0.5));
    const auto pt = pd_pfa(m, eta);
    REQUIRE(pt.converged);
    CHECK(pt.pfa == Approx(0.01).margin(1e-5));
    CHECK(pt.pd == Approx(0.9999999971361155).margin(1e-6));
  }

  SECTION("invalid targets") {
    const auto m = build_model(at_snr(-3.0), cpm);
    CHECK_THROWS_AS(solve_threshold(m, 0.0), config_error);
    CHECK_THROWS_AS(solve_threshold(m, 1.0), config_error);
  }
}

TEST_CASE("small-offset loss approximation tracks the exact model", "[glrt]") {
  CpmConfig cpm;
  const double eta = 234.9433273775503;  // calibrated for pfa 1e-2 at -3 dB
  const auto m0 = build_model(at_snr(-3.0), cpm, 0.0);
  const auto p0 = pd_pfa(m0, eta);
  REQUIRE(p0.converged);

  const auto m_eps = build_model(at_snr(-3.0), cpm, 2000.0);
  const auto p_eps = pd_pfa(m_eps, eta);
  REQUIRE(p_eps.converged);
  CHECK(p_eps.pd == Approx(0.5808897714297137).margin(5e-6));

  const double approx = pd_cfo_approx(p0.pd, 2000.0, 88, 5e-9);
  CHECK(approx == Approx(0.5807031454391777).margin(1e-5));
  // inside the small-offset regime the two stay within a few parts in 1e4
  CHECK(std::abs(approx - p_eps.pd) / p_eps.pd < 0.05);
}

TEST_CASE("degenerate fully-coherent covariance reports non-convergence", "[glrt]") {
  GlrtModel m;
  m.sigma2 = 88.0;
  m.nu_c = {1.0, 0.0};  // |nu_c| = 1 removes the CF decay
  m.cov_cross = {88.0, 0.0};
  m.mean_h1 = {cplx{10.0, 0.0}, cplx{5.0, 0.0}};
  m.mean_h0 = {cplx{5.0, 0.0}, cplx{10.0, 0.0}};
  const auto r = cdf_lambda(m, 0.0, Hypothesis::preamble_aligned);
  CHECK_FALSE(r.converged);
}

TEST_CASE("Monte Carlo detection rates agree with the inversion", "[glrt]") {
  const SystemConfig sys = at_snr(-3.0);
  CpmConfig cpm;
  const auto model = build_model(sys, cpm);
  const double eta = 234.9433273775503;
  const int n_trials = 4000;

  int h1_hits = 0;
  for (int t = 0; t < n_trials; ++t) {
    auto rng = trial_stream(555, 1, t);
    SynthOptions opt;
    opt.n_samples = 88;
    const auto sig = synthesize_beat(sys, cpm, rng, opt);
    const auto c = correlate(sig, sig.truth.beat_frequency_hz, cpm, sys, 0);
    if (glrt_statistic(c) > eta) ++h1_hits;
  }
  const double pd_mc = static_cast<double>(h1_hits) / n_trials;
  CHECK(pd_mc == Approx(0.580704624885184).margin(0.03));

  CpmConfig late = cpm;
  late.modulation_start_s = 2e-6;
  late.data_symbols = 300;
  int h0_hits = 0;
  for (int t = 0; t < n_trials; ++t) {
    auto rng = trial_stream(555, 2, t);
    SynthOptions opt;
    opt.n_samples = 88;  // pre-frame window: bare tone plus noise
    const auto sig = synthesize_beat(sys, late, rng, opt);
    const auto c = correlate(sig, sig.truth.beat_frequency_hz, late, sys, 0);
    if (glrt_statistic(c) > eta) ++h0_hits;
  }
  const double pfa_mc = static_cast<double>(h0_hits) / n_trials;
  CHECK(pfa_mc == Approx(0.01).margin(0.007));
}

TEST_CASE("noiseless scan locks onto the frame start", "[glrt]") {
  SystemConfig sys;
  sys.pin_theta = true;
  sys.theta_pin_rad = 0.3;
  CpmConfig cpm;
  cpm.modulation_start_s = 2e-6;
  cpm.data_symbols = 300;
  validate(cpm, sys);
  RngStream rng(13);
  const auto sig = synthesize_beat(sys, cpm, rng, {false, false});

  const auto res = synchronize(sig, sig.truth.beat_frequency_hz, cpm, sys, 1000.0);
  CHECK(res.m_hat == 400);
  CHECK(res.detected);
  CHECK(res.lambda_max == Approx(5653.1294100746945).margin(1e-4));

  BeatSignal stub;
  stub.sample_rate_hz = sys.sample_rate_hz;
  stub.samples.resize(50);
  CHECK_THROWS_AS(synchronize(stub, 0.0, cpm, sys, 0.0), config_error);
}
