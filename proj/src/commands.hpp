#pragma once

#include <string>

#include "run_config.hpp"

namespace ksns {

// Options gathered from the command line; empty string / negative number
// means "not given" and defers to the config file, then to defaults.
struct CliOptions {
  std::string config_path;
  std::string preset;
  double epsilon = -1.0;
  std::string out_dir;
  int threads = 1;
  bool deterministic = false;
  // semigroup-check
  std::string variant = "i";
  std::string p = "inf";
  std::string q = "1";
};

// Config file + command-line overrides folded together.
RunConfig resolve_config(const CliOptions& opts);

// Effective output directory: flag > config > KSNS_OUT_DIR > fallback.
std::string resolve_out_dir(const CliOptions& opts, const RunConfig& cfg,
                            const std::string& fallback);

int cmd_run(const CliOptions& opts);
int cmd_verify(const CliOptions& opts);
int cmd_sweep(const CliOptions& opts);
int cmd_semigroup_check(const CliOptions& opts);
int cmd_duhamel_check(const CliOptions& opts);

}  // namespace ksns
