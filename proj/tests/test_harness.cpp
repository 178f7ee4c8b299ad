#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "echoisac/experiment.hpp"

using namespace echoisac;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(std::string p) : path(std::move(p)) { std::filesystem::remove_all(path); }
  ~TempDir() { std::filesystem::remove_all(path); }
};

Config tiny_roc_config(const std::string& outdir, int n_threads) {
  Config cfg;
  cfg.experiment.kind = ExperimentKind::Roc;
  cfg.experiment.snr_grid_db = {-3.0};
  cfg.experiment.beta_grid = {0.1};
  cfg.experiment.lp_grid = {2};
  cfg.experiment.pfa_grid = {0.01, 0.1};
  cfg.experiment.n_trials = 200;
  cfg.experiment.n_threads = n_threads;
  cfg.experiment.seed = 99;
  cfg.experiment.outdir = outdir;
  return cfg;
}

}  // namespace

TEST_CASE("hash primitives match their reference vectors", "[harness]") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("beat") == 0x75e7429b95100805ull);
}

TEST_CASE("config hash is stable and sensitive", "[harness]") {
  Config a;
  const std::string ha = config_hash(a);
  CHECK(ha.size() == 16);
  for (char c : ha) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  CHECK(config_hash(a) == ha);

  Config b;
  b.system.snr_sample_db = 11.0;
  CHECK(config_hash(b) != ha);
  Config c;
  c.experiment.seed = 2;
  CHECK(config_hash(c) != ha);
}

TEST_CASE("mean interval uses the sample variance", "[harness]") {
  const auto ci = mean_ci({1.0, 2.0, 3.0, 4.0});
  CHECK(ci.value == Approx(2.5).epsilon(1e-15));
  CHECK(ci.half_width == Approx(1.96 * std::sqrt(5.0 / 3.0 / 4.0)).epsilon(1e-12));

  CHECK(mean_ci({}).value == 0.0);
  CHECK(mean_ci({}).half_width == 0.0);
  CHECK(mean_ci({7.0}).value == 7.0);
  CHECK(mean_ci({7.0}).half_width == 0.0);
}

TEST_CASE("proportion interval", "[harness]") {
  const auto ci = proportion_ci(25, 100);
  CHECK(ci.value == Approx(0.25).epsilon(1e-15));
  CHECK(ci.half_width == Approx(1.96 * std::sqrt(0.25 * 0.75 / 100.0)).epsilon(1e-12));
  CHECK(proportion_ci(0, 100).half_width == 0.0);
  CHECK(proportion_ci(3, 0).value == 0.0);
}

TEST_CASE("trial slots are identical for any worker count", "[harness]") {
  auto kernel = [](int i) {
    RngStream rng = trial_stream(42, 7, static_cast<std::uint64_t>(i));
    return rng.normal() + rng.uniform();
  };
  const auto one = run_trials<double>(101, 1, kernel);
  const auto three = run_trials<double>(101, 3, kernel);
  REQUIRE(one.size() == 101);
  REQUIRE(three.size() == 101);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == three[i]);
}

TEST_CASE("worker exceptions surface after the pool joins", "[harness]") {
  auto kernel = [](int i) -> double {
    if (i == 5) throw std::runtime_error("boom");
    return static_cast<double>(i);
  };
  CHECK_THROWS_AS(run_trials<double>(10, 1, kernel), std::runtime_error);
  CHECK_THROWS_AS(run_trials<double>(10, 3, kernel), std::runtime_error);
}

TEST_CASE("experiment reruns are byte-identical across runs and threads", "[harness]") {
  TempDir a("harness_roc_a");
  TempDir b("harness_roc_b");
  TempDir c("harness_roc_c");

  const auto rec_a = run_experiment(tiny_roc_config(a.path.string(), 1));
  const auto rec_b = run_experiment(tiny_roc_config(b.path.string(), 1));
  const auto rec_c = run_experiment(tiny_roc_config(c.path.string(), 2));

  REQUIRE(rec_a.files == std::vector<std::string>{"roc.csv"});
  CHECK(rec_a.failures.empty());
  const std::string csv_a = slurp(a.path / "roc.csv");
  CHECK(csv_a == slurp(b.path / "roc.csv"));
  CHECK(csv_a == slurp(c.path / "roc.csv"));
  CHECK(csv_a.substr(0, csv_a.find('\n')) ==
        "pfa,pd,snr_db,beta,L_p,threshold,pd_simulated,pd_ci,pfa_simulated,pfa_ci,n_trials");
  // two threshold rows for the single sweep point
  CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 3);

  const auto manifest = nlohmann::json::parse(slurp(a.path / "manifest.json"));
  CHECK(manifest.at("experiment").get<std::string>() == "roc");
  CHECK(manifest.at("config_hash").get<std::string>() == rec_a.config_hash);
  CHECK(manifest.at("seed").get<std::uint64_t>() == 99);
  CHECK(manifest.at("files").get<std::vector<std::string>>() == rec_a.files);
  CHECK(manifest.at("failures").empty());
  CHECK(manifest.at("figures").contains("roc.csv"));
  CHECK(manifest.at("wall_time_s").get<double>() >= 0.0);
}

TEST_CASE("a failing sweep point is recorded and the run continues", "[harness]") {
  TempDir d("harness_roc_fail");
  Config cfg = tiny_roc_config(d.path.string(), 1);
  cfg.experiment.lp_grid = {1000000, 2};  // first point cannot fit in the frame
  const auto rec = run_experiment(cfg);
  REQUIRE(rec.failures.size() == 1);
  CHECK(rec.failures[0].find("L_p=1000000") != std::string::npos);
  CHECK(rec.files == std::vector<std::string>{"roc.csv"});
  // surviving point still produced its rows
  const std::string csv = slurp(d.path / "roc.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto manifest = nlohmann::json::parse(slurp(d.path / "manifest.json"));
  CHECK(manifest.at("failures").size() == 1);
}
