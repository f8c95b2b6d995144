#include "run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace ksns {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line, const std::string& key) {
  const char* c = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(c, &end);
  if (end == c || *end != '\0')
    fail(line, "expected a number for '" + key + "', got '" + v + "'");
  if (!std::isfinite(x)) fail(line, "'" + key + "' must be finite");
  return x;
}

long parse_long(const std::string& v, int line, const std::string& key) {
  const char* c = v.c_str();
  char* end = nullptr;
  const long x = std::strtol(c, &end, 10);
  if (end == c || *end != '\0')
    fail(line, "expected an integer for '" + key + "', got '" + v + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

void check_choice(const std::string& v, std::initializer_list<const char*> ok,
                  int line, const std::string& key) {
  for (const char* o : ok)
    if (v == o) return;
  std::string opts;
  for (const char* o : ok) {
    if (!opts.empty()) opts += ", ";
    opts += o;
  }
  fail(line, "'" + key + "' must be one of {" + opts + "}, got '" + v + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (val.empty()) fail(line, "empty value for '" + key + "'");

    if (key == "dim") {
      const long d = parse_long(val, line, key);
      if (d != 2 && d != 3) fail(line, "'dim' must be 2 or 3");
      cfg.dim = static_cast<int>(d);
    } else if (key == "cells") {
      const auto items = split_list(val);
      if (items.empty() || items.size() > 3)
        fail(line, "'cells' takes 1 to 3 comma-separated counts");
      for (size_t i = 0; i < 3; ++i) {
        const std::string& it = items[std::min(i, items.size() - 1)];
        const long n = parse_long(it, line, key);
        if (n < 4) fail(line, "'cells' entries must be at least 4");
        cfg.cells[i] = static_cast<int>(n);
      }
    } else if (key == "lengths") {
      const auto items = split_list(val);
      if (items.empty() || items.size() > 3)
        fail(line, "'lengths' takes 1 to 3 comma-separated extents");
      for (size_t i = 0; i < 3; ++i) {
        const double L =
            parse_double(items[std::min(i, items.size() - 1)], line, key);
        if (!(L > 0.0)) fail(line, "'lengths' entries must be positive");
        cfg.lengths[i] = L;
      }
    } else if (key == "dt") {
      cfg.dt = parse_double(val, line, key);
    } else if (key == "t_end") {
      cfg.t_end = parse_double(val, line, key);
      if (!(cfg.t_end >= 0.0)) fail(line, "'t_end' must be nonnegative");
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(val, line, key);
      if (cfg.epsilon < 0.0) fail(line, "'epsilon' must be nonnegative");
    } else if (key == "fluid_model") {
      check_choice(val, {"stokes", "navier_stokes"}, line, key);
      cfg.fluid_model = val;
    } else if (key == "preset") {
      check_choice(val, {"sperm_excess", "egg_excess", "balanced", "stokes_ab"},
                   line, key);
      cfg.preset = val;
    } else if (key == "tensor.kind") {
      check_choice(val, {"zero", "identity_chi", "rotational", "custom-cutoff"},
                   line, key);
      cfg.tensor_kind = val;
    } else if (key == "tensor.c_s") {
      cfg.tensor_c_s = parse_double(val, line, key);
      if (cfg.tensor_c_s < 0.0) fail(line, "'tensor.c_s' must be nonnegative");
    } else if (key == "tensor.eta") {
      cfg.tensor_eta = parse_double(val, line, key);
      if (cfg.tensor_eta < 0.0 || cfg.tensor_eta > 1.0)
        fail(line, "'tensor.eta' must lie in [0, 1]");
    } else if (key == "phi.kind") {
      check_choice(val, {"linear_gravity", "zero"}, line, key);
      cfg.phi_kind = val;
    } else if (key == "output.every") {
      cfg.output_every = parse_double(val, line, key);
      if (!(cfg.output_every > 0.0))
        fail(line, "'output.every' must be positive");
    } else if (key == "output.dir") {
      cfg.output_dir = val;
    } else if (key == "seed") {
      const long s = parse_long(val, line, key);
      if (s < 0) fail(line, "'seed' must be nonnegative");
      cfg.seed = static_cast<unsigned long>(s);
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace ksns
