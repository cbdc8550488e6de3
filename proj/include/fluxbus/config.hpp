#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxbus/circuit.hpp"
#include "fluxbus/effective.hpp"
#include "fluxbus/errors.hpp"
#include "fluxbus/units.hpp"

// Run configuration: a flat key/value tree parsed from either an INI-style
// text format with dotted section names and unit-suffixed keys, or an
// equivalent JSON document. All dimensioned keys carry their unit in the
// key name (e_c_ghz, t1_us, ...), and conversion to internal units happens
// here and nowhere else.

namespace fluxbus {

inline constexpr const char* fluxbus_version = "0.1.0";

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class ConfigTree {
 public:
  static ConfigTree parse(const std::string& text) {
    std::string t = text;
    size_t firstc = t.find_first_not_of(" \t\r\n");
    if (firstc != std::string::npos && t[firstc] == '{')
      return parse_json(text);
    return parse_ini(text);
  }

  static ConfigTree parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ConfigTree tree = parse(ss.str());
    tree.raw_ = ss.str();
    return tree;
  }

  static ConfigTree parse_ini(const std::string& text) {
    ConfigTree tree;
    tree.raw_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) +
                            ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(lineno) + ": empty section");
        continue;
      }
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value, got '" + line + "'");
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key.empty() || val.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
      std::string full = section.empty() ? key : section + "." + key;
      if (tree.kv_.count(full))
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + full);
      tree.kv_[full] = val;
    }
    return tree;
  }

  static ConfigTree parse_json(const std::string& text) {
    ConfigTree tree;
    tree.raw_ = text;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("JSON parse failure: ") + e.what());
    }
    flatten(j, "", tree.kv_);
    return tree;
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  // every key under "prefix." (first path component after the prefix)
  std::vector<std::string> subsections(const std::string& prefix) const {
    std::vector<std::string> out;
    std::string p = prefix + ".";
    for (const auto& [k, v] : kv_) {
      if (k.rfind(p, 0) != 0) continue;
      std::string rest = k.substr(p.size());
      size_t dot = rest.find('.');
      if (dot == std::string::npos) continue;
      std::string name = rest.substr(0, dot);
      if (std::find(out.begin(), out.end(), name) == out.end())
        out.push_back(name);
    }
    return out;
  }

  std::string get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
    std::string v = it->second;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
      v = v.substr(1, v.size() - 2);
    return v;
  }

  double get_double(const std::string& key) const {
    std::string v = get_string(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    return x;
  }

  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_int(const std::string& key) const {
    double x = get_double(key);
    long i = static_cast<long>(std::llround(x));
    if (std::abs(x - i) > 1e-9)
      throw ConfigError("key '" + key + "' must be an integer");
    return i;
  }

  long get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    std::string v = get_string(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw ConfigError("key '" + key + "' must be a [list]");
    std::vector<double> out;
    std::string body = v.substr(1, v.size() - 2);
    std::istringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      char* end = nullptr;
      double x = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': bad list element '" + item + "'");
      out.push_back(x);
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  const std::string& raw() const { return raw_; }
  uint64_t hash() const { return fnv1a64(raw_); }

 private:
  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static void flatten(const nlohmann::json& j, const std::string& prefix,
                      std::map<std::string, std::string>& kv) {
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        flatten(it.value(), key, kv);
      }
    } else if (j.is_array()) {
      std::string list = "[";
      for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
          throw ConfigError("key '" + prefix + "': only numeric arrays supported");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", j[i].get<double>());
        list += std::string(i ? "," : "") + buf;
      }
      kv[prefix] = list + "]";
    } else if (j.is_string()) {
      kv[prefix] = j.get<std::string>();
    } else if (j.is_boolean()) {
      kv[prefix] = j.get<bool>() ? "true" : "false";
    } else if (j.is_number()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
      kv[prefix] = buf;
    } else {
      throw ConfigError("key '" + prefix + "': unsupported JSON value");
    }
  }

  std::map<std::string, std::string> kv_;
  std::string raw_;
};

// ---------------------------------------------------------------------------
// Typed sections.
// ---------------------------------------------------------------------------
inline BusCircuitParams device_from_config(const ConfigTree& cfg) {
  BusCircuitParams p;
  p.e_c = ghz_to_radns(cfg.get_double("device.e_c_ghz"));
  p.e_j_sum = ghz_to_radns(cfg.get_double("device.e_j_sum_ghz"));
  p.e_l0 = ghz_to_radns(cfg.get_double("device.e_l0_ghz"));
  p.v = mps_to_mpns(cfg.get_double("device.v_m_per_s"));
  p.length = cfg.get_double("device.length_m");
  p.asym = cfg.get_double_or("device.asym", 0.0);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[device] ") + e.what());
  }
  return p;
}

inline QubitParams qubit_from_config(const ConfigTree& cfg, const std::string& name) {
  std::string base = "qubit." + name;
  QubitParams q;
  q.index = std::stoi(name);
  q.omega_q = ghz_to_radns(cfg.get_double(base + ".omega_ghz"));
  q.alpha = mhz_to_radns(cfg.get_double_or(base + ".alpha_mhz", 0.0));
  q.x = cfg.get_double_or(base + ".x_m", 0.0);
  q.g0 = mhz_to_radns(cfg.get_double(base + ".g0_mhz"));
  if (cfg.has(base + ".dist_m")) q.dist = cfg.get_double(base + ".dist_m");
  if (cfg.has(base + ".t1_us")) q.t1 = us_to_ns(cfg.get_double(base + ".t1_us"));
  if (cfg.has(base + ".t2r_us")) q.t2r = us_to_ns(cfg.get_double(base + ".t2r_us"));
  if (cfg.has(base + ".t2e_us")) q.t2e = us_to_ns(cfg.get_double(base + ".t2e_us"));
  try {
    q.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[qubit." + name + "] " + e.what());
  }
  return q;
}

inline std::vector<QubitParams> qubits_from_config(const ConfigTree& cfg) {
  std::vector<QubitParams> out;
  for (const auto& name : cfg.subsections("qubit"))
    out.push_back(qubit_from_config(cfg, name));
  std::sort(out.begin(), out.end(),
            [](const QubitParams& a, const QubitParams& b) { return a.index < b.index; });
  return out;
}

inline QubitParams find_qubit(const std::vector<QubitParams>& qs, int index) {
  for (const auto& q : qs)
    if (q.index == index) return q;
  throw ConfigError("task references qubit " + std::to_string(index) +
                    " which is not defined");
}

}  // namespace fluxbus
