#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "commands.hpp"

// Command-line front end: run / verify / sweep / semigroup-check /
// duhamel-check over a shared flag set.  Exit codes: 0 success, 1 check
// failure or blow-up, 2 configuration errors.

int main(int argc, char** argv) {
  CLI::App app{"coral spawning chemotaxis-fluid simulator and verifier"};
  app.require_subcommand(1);

  ksns::CliOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "key = value config file");
    sub->add_option("--preset", opts.preset,
                    "sperm_excess | egg_excess | balanced | stokes_ab");
    sub->add_option("--epsilon", opts.epsilon, "initial-data amplitude")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opts.out_dir,
                    "output directory (KSNS_OUT_DIR as fallback)");
    sub->add_option("--threads", opts.threads, "worker threads for sweep");
    sub->add_flag("--deterministic", opts.deterministic,
                  "pin threads so repeated runs are byte-identical");
  };

  CLI::App* c_run = app.add_subcommand("run", "integrate a scenario");
  CLI::App* c_verify =
      app.add_subcommand("verify", "run + identity ledger + decay fits");
  CLI::App* c_sweep =
      app.add_subcommand("sweep", "amplitude sweep around a base scenario");
  CLI::App* c_semi = app.add_subcommand(
      "semigroup-check", "heat-flow decay-bound verification (CSV)");
  CLI::App* c_duh = app.add_subcommand(
      "duhamel-check", "mild-solution cross-validation (CSV)");
  for (CLI::App* sub : {c_run, c_verify, c_sweep, c_semi, c_duh})
    add_common(sub);
  c_semi->add_option("--variant", opts.variant,
                     "decay bound variant: i, ii, iii, iv");
  c_semi->add_option("--p", opts.p, "target norm order (number or 'inf')");
  c_semi->add_option("--q", opts.q, "source norm order (number or 'inf')");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_run->parsed()) return ksns::cmd_run(opts);
    if (c_verify->parsed()) return ksns::cmd_verify(opts);
    if (c_sweep->parsed()) return ksns::cmd_sweep(opts);
    if (c_semi->parsed()) return ksns::cmd_semigroup_check(opts);
    if (c_duh->parsed()) return ksns::cmd_duhamel_check(opts);
  } catch (const ksns::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
