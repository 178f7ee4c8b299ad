#pragma once

// Signal persistence: raw interleaved float64 (re, im) sample file plus a
// structured-text sidecar ("<path>.meta", key = value) carrying the sample
// rate and the synthesis ground truth, and a CSV dump (n, re, im) for
// debugging.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "echoisac/csv.hpp"
#include "echoisac/ini.hpp"
#include "echoisac/signal.hpp"

namespace echoisac {

namespace detail {

inline std::string join_symbols(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<int> parse_symbol_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& tok : split_list(s))
    if (!tok.empty()) out.push_back(static_cast<int>(parse_int(tok, "symbol list")));
  return out;
}

}  // namespace detail

inline void write_signal(const std::string& path, const BeatSignal& sig) {
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open for writing: " + path);
    for (const cplx& c : sig.samples) {
      const double re = c.real(), im = c.imag();
      f.write(reinterpret_cast<const char*>(&re), sizeof(double));
      f.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
    if (!f) throw config_error("write failed: " + path);
  }
  std::ostringstream m;
  m << "n_samples = " << sig.samples.size() << "\n";
  m << "sample_rate_hz = " << format_double(sig.sample_rate_hz) << "\n";
  m << "delay_s = " << format_double(sig.truth.delay_s) << "\n";
  m << "beat_frequency_hz = " << format_double(sig.truth.beat_frequency_hz) << "\n";
  m << "carrier_phase_rad = " << format_double(sig.truth.carrier_phase_rad) << "\n";
  m << "aggregate_phase_rad = " << format_double(sig.truth.aggregate_phase_rad) << "\n";
  m << "frame_start_sample = " << sig.truth.frame_start_sample << "\n";
  m << "amplitude = " << format_double(sig.truth.amplitude) << "\n";
  m << "noise_variance = " << format_double(sig.truth.noise_variance) << "\n";
  if (!sig.truth.preamble.empty())
    m << "preamble = " << detail::join_symbols(sig.truth.preamble) << "\n";
  if (!sig.truth.data_symbols.empty())
    m << "data_symbols = " << detail::join_symbols(sig.truth.data_symbols) << "\n";
  std::ofstream f(path + ".meta", std::ios::binary);
  if (!f) throw config_error("cannot open for writing: " + path + ".meta");
  const std::string s = m.str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) throw config_error("write failed: " + path + ".meta");
}

inline BeatSignal read_signal(const std::string& path) {
  BeatSignal sig;
  {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open: " + path);
    f.seekg(0, std::ios::end);
    const auto bytes = static_cast<long long>(f.tellg());
    f.seekg(0);
    if (bytes % (2 * static_cast<long long>(sizeof(double))) != 0)
      throw config_error("sample file size is not a whole number of complex float64: " + path);
    const auto n = bytes / (2 * sizeof(double));
    sig.samples.resize(static_cast<std::size_t>(n));
    for (auto& c : sig.samples) {
      double re = 0.0, im = 0.0;
      f.read(reinterpret_cast<char*>(&re), sizeof(double));
      f.read(reinterpret_cast<char*>(&im), sizeof(double));
      c = {re, im};
    }
    if (!f) throw config_error("read failed: " + path);
  }
  std::ifstream mf(path + ".meta");
  if (!mf) throw config_error("cannot open: " + path + ".meta");
  std::ostringstream ss;
  ss << mf.rdbuf();
  const IniDocument doc = parse_ini(ss.str());
  const auto& kvs = doc.sections.count("") ? doc.sections.at("") : std::vector<std::pair<std::string, std::string>>{};
  for (const auto& [key, val] : kvs) {
    if (key == "n_samples") {
      if (parse_int(val, key) != static_cast<long long>(sig.samples.size()))
        throw config_error("metadata sample count disagrees with file size: " + path);
    } else if (key == "sample_rate_hz") sig.sample_rate_hz = parse_double(val, key);
    else if (key == "delay_s") sig.truth.delay_s = parse_double(val, key);
    else if (key == "beat_frequency_hz") sig.truth.beat_frequency_hz = parse_double(val, key);
    else if (key == "carrier_phase_rad") sig.truth.carrier_phase_rad = parse_double(val, key);
    else if (key == "aggregate_phase_rad") sig.truth.aggregate_phase_rad = parse_double(val, key);
    else if (key == "frame_start_sample") sig.truth.frame_start_sample = parse_int(val, key);
    else if (key == "amplitude") sig.truth.amplitude = parse_double(val, key);
    else if (key == "noise_variance") sig.truth.noise_variance = parse_double(val, key);
    else if (key == "preamble") sig.truth.preamble = detail::parse_symbol_list(val);
    else if (key == "data_symbols") sig.truth.data_symbols = detail::parse_symbol_list(val);
    else throw config_error("unknown key in signal metadata: " + key);
  }
  return sig;
}

inline void write_signal_csv(const std::string& path, const BeatSignal& sig) {
  CsvTable t({"n", "re", "im"});
  for (std::size_t n = 0; n < sig.samples.size(); ++n)
    t.begin_row().cell(static_cast<long long>(n)).cell(sig.samples[n].real()).cell(sig.samples[n].imag());
  t.write(path);
}

}  // namespace echoisac
