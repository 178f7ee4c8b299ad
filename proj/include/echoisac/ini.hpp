#pragma once

// Minimal INI reader/writer for the run configuration files.
// Supported syntax: [section] headers, key = value lines, blank lines,
// comments starting with ';' or '#'. Keys are unique per section.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "echoisac/common.hpp"

namespace echoisac {

struct IniDocument {
  // section -> ordered (key, value) pairs
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    if (it == sections.end()) return false;
    for (const auto& kv : it->second)
      if (kv.first == key) return true;
    return false;
  }

  std::string get(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    if (it != sections.end())
      for (const auto& kv : it->second)
        if (kv.first == key) return kv.second;
    throw config_error("missing ini key [" + sec + "] " + key);
  }
};

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::strip(line);
    if (s.empty() || s[0] == ';' || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw config_error("ini line " + std::to_string(lineno) + ": unterminated section header");
      section = detail::strip(s.substr(1, s.size() - 2));
      doc.sections[section];  // record even if empty
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw config_error("ini line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::strip(s.substr(0, eq));
    const std::string value = detail::strip(s.substr(eq + 1));
    if (key.empty()) throw config_error("ini line " + std::to_string(lineno) + ": empty key");
    auto& kvs = doc.sections[section];
    for (const auto& kv : kvs)
      if (kv.first == key) throw config_error("ini line " + std::to_string(lineno) + ": duplicate key " + key);
    kvs.emplace_back(key, value);
  }
  return doc;
}

// Parsing helpers ------------------------------------------------------------

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw config_error("");
    return v;
  } catch (...) {
    throw config_error("invalid number for " + what + ": '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw config_error("");
    return v;
  } catch (...) {
    throw config_error("invalid integer for " + what + ": '" + s + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(detail::strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = detail::strip(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    if (tok.empty()) throw config_error("empty element in list for " + what);
    out.push_back(parse_double(tok, what));
  }
  return out;
}

// Deterministic float formatting (locale-independent, round-trip exact).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char cand[64];
    std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
    if (std::stod(cand) == v) return cand;
  }
  return buf;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace echoisac
