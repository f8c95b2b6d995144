#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ksns {

// Flat `key = value` run description.  Unset axes inherit the first value,
// so `cells = 128` means a uniform box.
struct RunConfig {
  int dim = 2;
  std::array<int, 3> cells = {128, 128, 128};
  std::array<double, 3> lengths = {M_PI, M_PI, M_PI};
  double dt = 0.0;  // <= 0: automatic CFL step
  double t_end = 20.0;
  double epsilon = 0.01;
  std::string fluid_model = "navier_stokes";
  std::string preset = "sperm_excess";
  std::string tensor_kind = "identity_chi";
  double tensor_c_s = 0.5;
  double tensor_eta = 0.0;
  std::string phi_kind = "linear_gravity";
  double output_every = 0.1;
  std::string output_dir;
  unsigned long seed = 1;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses config text; errors carry 1-based line numbers.  Unknown keys are
// rejected outright.
RunConfig parse_run_config(const std::string& text);

// Loads and parses a config file; missing file throws ConfigError.
RunConfig load_run_config(const std::string& path);

}  // namespace ksns
