#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ksns/diagnostics.hpp"
#include "ksns/semigroup.hpp"
#include "presets.hpp"

namespace ksns {

namespace {

namespace fs = std::filesystem;

struct Arm {
  Scenario scenario;
  std::string label;  // subdirectory when a preset expands to several runs
};

// stokes_ab runs the same data under both fluid models; everything else is
// a single arm.
std::vector<Arm> expand_arms(const RunConfig& cfg) {
  Scenario sc = scenario_from_config(cfg);
  if (cfg.preset != "stokes_ab") return {{sc, ""}};
  Scenario stokes = sc, ns = sc;
  stokes.fluid_model = FluidModel::Stokes;
  stokes.name = "stokes_ab/stokes";
  ns.fluid_model = FluidModel::NavierStokes;
  ns.name = "stokes_ab/navier_stokes";
  return {{stokes, "stokes"}, {ns, "navier_stokes"}};
}

std::string arm_dir(const std::string& base, const Arm& arm) {
  if (base.empty()) return "";
  if (arm.label.empty()) return base;
  return (fs::path(base) / arm.label).string();
}

void write_identities_csv(const std::string& dir,
                          const std::vector<IdentityCheck>& checks) {
  if (dir.empty()) return;
  std::ofstream out(fs::path(dir) / "identities.csv", std::ios::binary);
  out << "check,worst,tolerance,passed\n";
  for (const auto& c : checks)
    out << c.name << ',' << format_double(c.worst) << ','
        << format_double(c.tolerance) << ',' << (c.passed ? 1 : 0) << '\n';
}

void write_decay_csv(const std::string& dir, const DecayReport& rep) {
  if (dir.empty()) return;
  std::ofstream out(fs::path(dir) / "decay.csv", std::ios::binary);
  out << "norm,alpha,prefactor,r_squared,predicted_bound,consistent,"
         "samples,window_lo,window_hi\n";
  for (const auto& f : rep.fits)
    out << f.norm << ',' << format_double(f.alpha) << ','
        << format_double(f.prefactor) << ',' << format_double(f.r_squared)
        << ',' << format_double(f.predicted_bound) << ','
        << (f.consistent ? 1 : 0) << ',' << f.samples << ','
        << format_double(f.window_lo) << ',' << format_double(f.window_hi)
        << '\n';
}

void print_identities(const std::vector<IdentityCheck>& checks) {
  for (const auto& c : checks)
    std::printf("  %-26s worst=% .3e  tol=%.0e  %s\n", c.name.c_str(), c.worst,
                c.tolerance, c.passed ? "pass" : "FAIL");
}

void print_decay(const DecayReport& rep) {
  std::printf("  rate ceilings: lambda1=%.6f level=%.6f alpha1<=%.6f alpha2<=%.6f\n",
              rep.lambda1, rep.level, rep.alpha1_bound, rep.alpha2_bound);
  for (const auto& f : rep.fits)
    std::printf("  %-24s alpha=%8.4f  K=%9.3e  R2=%.5f  bound=%.4f  %s\n",
                f.norm.c_str(), f.alpha, f.prefactor, f.r_squared,
                f.predicted_bound, f.consistent ? "consistent" : "LOW");
}

double parse_norm_order(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF") return INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !(v >= 1.0))
    throw ConfigError("norm order must be a number >= 1 or 'inf', got '" + s +
                      "'");
  return v;
}

}  // namespace

RunConfig resolve_config(const CliOptions& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (!opts.preset.empty()) {
    const std::string p = opts.preset;
    if (p != "sperm_excess" && p != "egg_excess" && p != "balanced" &&
        p != "stokes_ab")
      throw ConfigError("unknown preset '" + p + "'");
    cfg.preset = p;
  }
  if (opts.epsilon >= 0.0) cfg.epsilon = opts.epsilon;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  return cfg;
}

std::string resolve_out_dir(const CliOptions& opts, const RunConfig& cfg,
                            const std::string& fallback) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("KSNS_OUT_DIR"); env && *env) return env;
  return fallback;
}

int cmd_run(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const std::string base = resolve_out_dir(opts, cfg, "ksns_out");
  int rc = 0;
  for (const Arm& arm : expand_arms(cfg)) {
    const std::string dir = arm_dir(base, arm);
    if (!dir.empty()) fs::create_directories(dir);
    RunOptions opt;
    opt.out_dir = dir;
    char shape[48];
    if (cfg.dim == 3)
      std::snprintf(shape, sizeof(shape), "%dx%dx%d", cfg.cells[0],
                    cfg.cells[1], cfg.cells[2]);
    else
      std::snprintf(shape, sizeof(shape), "%dx%d", cfg.cells[0], cfg.cells[1]);
    std::printf("run %s: %dD %s t_end=%g epsilon=%g fluid=%s out=%s\n",
                arm.scenario.name.c_str(), cfg.dim, shape, arm.scenario.t_end,
                arm.scenario.epsilon,
                fluid_model_name(arm.scenario.fluid_model), dir.c_str());
    const RunResult res = run(arm.scenario, opt);
    const DiagRow& last = res.rows.back();
    std::printf(
        "  steps=%ld t=%.6g blew_up=%d  sup m=%.3e  sup|rho-rho_inf|=%.3e  "
        "sup|u|=%.3e\n",
        res.steps, res.t_reached, res.blew_up ? 1 : 0, last.linf_m,
        last.linf_rho_dev, last.linf_u);
    if (res.blew_up) {
      std::printf("  watchdog fired at t=%.6g\n", res.t_reached);
      rc = 1;
    }
  }
  return rc;
}

int cmd_verify(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const std::string base = resolve_out_dir(opts, cfg, "ksns_out");
  bool all_ok = true;
  for (const Arm& arm : expand_arms(cfg)) {
    const Scenario& sc = arm.scenario;
    const std::string dir = arm_dir(base, arm);
    if (!dir.empty()) fs::create_directories(dir);
    RunOptions opt;
    opt.out_dir = dir;
    std::printf("verify %s: epsilon=%g fluid=%s\n", sc.name.c_str(),
                sc.epsilon, fluid_model_name(sc.fluid_model));
    const RunResult res = run(sc, opt);
    if (res.blew_up) {
      std::printf("  watchdog fired at t=%.6g -> FAIL\n", res.t_reached);
      all_ok = false;
      continue;
    }
    const auto checks = check_identities(res.rows);
    print_identities(checks);
    write_identities_csv(dir, checks);
    bool arm_ok = all_identities_pass(checks);

    // Decay fits are mandatory whenever the theory predicts a positive rate
    // for nontrivial data; the balanced preset stays informational.
    const bool decay_mandatory = predicted_alpha1(sc) > 0.0 && sc.epsilon > 0.0;
    try {
      const DecayReport rep = build_decay_report(sc, res.rows);
      print_decay(rep);
      write_decay_csv(dir, rep);
      if (decay_mandatory) arm_ok = arm_ok && rep.all_consistent;
    } catch (const std::runtime_error& e) {
      std::printf("  decay fit unavailable: %s\n", e.what());
      if (decay_mandatory) arm_ok = false;
    }
    std::printf("  => %s\n", arm_ok ? "PASS" : "FAIL");
    all_ok = all_ok && arm_ok;
  }
  return all_ok ? 0 : 1;
}

int cmd_sweep(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (!(cfg.epsilon > 0.0))
    throw ConfigError("sweep needs a positive base epsilon");
  const std::string base_dir = resolve_out_dir(opts, cfg, "ksns_out");
  fs::create_directories(base_dir);
  RunConfig base_cfg = cfg;
  if (base_cfg.preset == "stokes_ab") base_cfg.preset = "sperm_excess";
  const Scenario basesc = scenario_from_config(base_cfg);

  std::vector<double> epsilons;
  for (double f : {0.0, 0.3, 1.0, 3.0, 10.0, 30.0})
    epsilons.push_back(f * cfg.epsilon);
  const int threads = opts.deterministic ? 1 : std::max(1, opts.threads);
  const auto rows = epsilon_sweep(basesc, epsilons, threads);

  std::ofstream out(fs::path(base_dir) / "sweep.csv", std::ios::binary);
  out << "epsilon,blew_up,t_reached,final_linf_m_dev,final_linf_rho_dev,"
         "final_linf_u,alpha_m,r2_m,alpha_rho,r2_rho,alpha_u,r2_u,"
         "fits_available,decay_consistent\n";
  std::printf("sweep %s: base epsilon=%g, %zu scenarios, threads=%d\n",
              basesc.name.c_str(), cfg.epsilon, epsilons.size(), threads);
  for (const auto& r : rows) {
    out << format_double(r.epsilon) << ',' << (r.blew_up ? 1 : 0) << ','
        << format_double(r.t_reached) << ','
        << format_double(r.final_linf_m_dev) << ','
        << format_double(r.final_linf_rho_dev) << ','
        << format_double(r.final_linf_u) << ',' << format_double(r.alpha_m)
        << ',' << format_double(r.r2_m) << ',' << format_double(r.alpha_rho)
        << ',' << format_double(r.r2_rho) << ',' << format_double(r.alpha_u)
        << ',' << format_double(r.r2_u) << ',' << (r.fits_available ? 1 : 0)
        << ',' << (r.decay_consistent ? 1 : 0) << '\n';
    std::printf(
        "  eps=%-8g %s t=%.4g  alpha_m=%7.4f alpha_rho=%7.4f  %s\n",
        r.epsilon, r.blew_up ? "BLOWUP" : "global", r.t_reached, r.alpha_m,
        r.alpha_rho,
        r.blew_up ? "-" : (r.decay_consistent ? "consistent" : "degraded"));
  }
  return 0;
}

int cmd_semigroup_check(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const BoxDomain dom(cfg.dim, cfg.cells, cfg.lengths);
  const double p = parse_norm_order(opts.p);
  const double q = parse_norm_order(opts.q);

  DecayVariant variant;
  if (opts.variant == "i")
    variant = DecayVariant::Smoothing;
  else if (opts.variant == "ii")
    variant = DecayVariant::GradientSmoothing;
  else if (opts.variant == "iii")
    variant = DecayVariant::GradientToGradient;
  else if (opts.variant == "iv")
    variant = DecayVariant::DivergenceSource;
  else
    throw ConfigError("--variant must be one of i, ii, iii, iv");

  const std::vector<double> times = standard_time_lattice(dom);
  BoundCheckReport rep;
  if (variant == DecayVariant::DivergenceSource)
    rep = verify_lp_lq_divergence(p, q, standard_staggered_probes(dom, cfg.seed),
                                  times);
  else
    rep = verify_lp_lq(variant, p, q,
                       standard_scalar_probes(dom, cfg.seed,
                                              variant == DecayVariant::Smoothing),
                       times);

  std::printf("variant,p,q,sigma,lambda1,probe,t,ratio\n");
  for (const auto& row : rep.rows)
    std::printf("%s,%s,%s,%s,%s,%d,%s,%s\n", opts.variant.c_str(),
                format_double(p).c_str(), format_double(q).c_str(),
                format_double(rep.sigma).c_str(),
                format_double(rep.lambda1_used).c_str(), row.probe,
                format_double(row.t).c_str(), format_double(row.ratio).c_str());
  std::fprintf(stderr, "measured_ratio=%.6g tail_growth=%.3e passed=%d\n",
               rep.measured_ratio, rep.tail_growth, rep.passed ? 1 : 0);
  return rep.passed ? 0 : 1;
}

int cmd_duhamel_check(const CliOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  RunConfig short_cfg = cfg;
  if (short_cfg.preset == "stokes_ab") short_cfg.preset = "sperm_excess";
  Scenario sc = scenario_from_config(short_cfg);
  const double horizon = std::min(0.25, cfg.t_end);

  const CrossValidation cv = cross_validate(sc, horizon);
  const std::string dir = resolve_out_dir(opts, cfg, "");
  std::ofstream file;
  if (!dir.empty()) {
    fs::create_directories(dir);
    file.open(fs::path(dir) / "duhamel.csv", std::ios::binary);
  }
  auto emit = [&](const std::string& line) {
    std::printf("%s\n", line.c_str());
    if (file.is_open()) file << line << '\n';
  };
  emit("record,name,value,extra");
  for (size_t k = 0; k < cv.picard_dists.size(); ++k)
    emit("picard_dist," + std::to_string(k) + "," +
         format_double(cv.picard_dists[k]) + ",");
  for (const auto& f : cv.fields)
    emit("field," + f.field + "," + format_double(f.disagreement) + "," +
         format_double(f.tolerance));
  emit("summary,converged," + std::to_string(cv.picard_converged ? 1 : 0) +
       ",");
  emit("summary,passed," + std::to_string(cv.passed ? 1 : 0) + ",");
  std::fprintf(stderr, "duhamel-check t_end=%g dt_coarse=%g passed=%d\n",
               cv.t_end, cv.dt_coarse, cv.passed ? 1 : 0);
  return cv.passed ? 0 : 1;
}

}  // namespace ksns
