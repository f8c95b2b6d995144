#include "presets.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ksns/sensitivity.hpp"

namespace ksns {

namespace {

// Zero-mean cosine mixture with sup <= 1.  Modes are Neumann-compatible
// cosines with 1 <= |k| <= 3 per axis, so the discrete cell mean vanishes
// exactly and equilibrium levels are independent of the perturbation.
Field cosine_perturbation(const BoxDomain& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> mode(0, 3);
  struct Term {
    std::array<int, 3> k;
    double a;
  };
  std::vector<Term> terms;
  double scale = 0.0;
  while (terms.size() < 4) {
    Term t;
    t.k = {mode(rng), mode(rng), dom.dim() == 3 ? mode(rng) : 0};
    if (t.k[0] + t.k[1] + t.k[2] == 0) continue;  // keep the mean out
    t.a = coeff(rng);
    scale += std::abs(t.a);
    terms.push_back(t);
  }
  Field out(dom);
  out.values = sample_cells(dom, [&](double x, double y, double z) {
                 double v = 0.0;
                 for (const Term& t : terms) {
                   double w = t.a *
                              std::cos(M_PI * t.k[0] * x / dom.length(0)) *
                              std::cos(M_PI * t.k[1] * y / dom.length(1));
                   if (dom.dim() == 3)
                     w *= std::cos(M_PI * t.k[2] * z / dom.length(2));
                   v += w;
                 }
                 return v;
               }).values /
               scale;
  return out;
}

Field constant_field(const BoxDomain& dom, double v) {
  Field f(dom);
  f.values.setConstant(v);
  return f;
}

Field linear_gravity_potential(const BoxDomain& dom) {
  const int vert = dom.dim() - 1;
  const double g = 0.25;
  return sample_cells(dom, [&](double x, double y, double z) {
    const double up = vert == 1 ? y : z;
    (void)x;
    return -g * up;
  });
}

}  // namespace

Field bump_field(const BoxDomain& dom) {
  return sample_cells(dom, [&](double x, double y, double z) {
    double v = std::sin(M_PI * x / dom.length(0)) *
               std::sin(M_PI * y / dom.length(1));
    v *= v;
    if (dom.dim() == 3) {
      const double s = std::sin(M_PI * z / dom.length(2));
      v *= s * s;
    }
    return v;
  });
}

Scenario make_preset(const std::string& name, const BoxDomain& dom,
                     double epsilon, unsigned long seed) {
  if (epsilon < 0.0)
    throw std::invalid_argument("make_preset: epsilon must be nonnegative");
  std::mt19937_64 rng(seed);
  const Field p_rho = cosine_perturbation(dom, rng);
  const Field p_m = cosine_perturbation(dom, rng);
  const Field bump = bump_field(dom);

  Scenario sc;
  sc.domain = dom;
  sc.epsilon = epsilon;
  sc.seed = seed;
  sc.name = name;
  sc.tensor = SensitivityTensor::identity_chi(0.5, 0.0);
  sc.phi = linear_gravity_potential(dom);
  sc.fluid_model = FluidModel::NavierStokes;
  sc.require_nontrivial = epsilon > 0.0;

  const std::string base = name == "stokes_ab" ? "sperm_excess" : name;
  Field dev_rho(dom), dev_m(dom);
  double eq_rho = 0.0, eq_m = 0.0, eq_c = 0.0;
  if (base == "sperm_excess") {
    eq_rho = 1.0;
    dev_rho.values = 1.0 + 0.5 * p_rho.values;
    dev_m.values = 1.0 + 0.5 * p_m.values;
  } else if (base == "egg_excess") {
    eq_m = 1.0;
    eq_c = 1.0;
    dev_rho.values = 1.0 + 0.5 * p_rho.values;
    dev_m.values = 1.0 + 0.5 * p_m.values;
  } else if (base == "balanced") {
    dev_rho.values = 1.5 * (1.0 + 0.5 * p_rho.values);
    dev_m.values = 1.5 * (1.0 + 0.5 * p_m.values);
  } else {
    throw std::invalid_argument("make_preset: unknown preset '" + name + "'");
  }
  sc.rho0 = constant_field(dom, eq_rho);
  sc.rho0.values += epsilon * dev_rho.values;
  sc.m0 = constant_field(dom, eq_m);
  sc.m0.values += epsilon * dev_m.values;
  sc.c0 = constant_field(dom, eq_c);
  sc.c0.values += epsilon * bump.values;

  SpectralCell<double> plan(dom);
  sc.u0 = leray_project(swirl_velocity(dom), plan).first;
  for (int a = 0; a < dom.dim(); ++a) sc.u0.comp[a] *= epsilon;
  return sc;
}

Scenario linear_decoupled_scenario(const BoxDomain& dom, double t_end) {
  Scenario sc;
  sc.domain = dom;
  sc.rho0 = Field(dom);
  sc.m0 = constant_field(dom, 1.0);
  sc.c0 = bump_field(dom);
  sc.phi = Field(dom);
  sc.u0 = VectorField(dom);
  sc.tensor = SensitivityTensor::zero();
  sc.fluid_model = FluidModel::Stokes;
  sc.t_end = t_end;
  sc.output_every = 0.05;
  sc.epsilon = 0.0;
  sc.require_nontrivial = false;
  sc.name = "linear_decoupled";
  return sc;
}

Scenario scenario_from_config(const RunConfig& cfg) {
  const BoxDomain dom(cfg.dim, cfg.cells, cfg.lengths);
  Scenario sc = make_preset(cfg.preset, dom, cfg.epsilon, cfg.seed);

  if (cfg.tensor_kind == "zero")
    sc.tensor = SensitivityTensor::zero();
  else if (cfg.tensor_kind == "identity_chi")
    sc.tensor = SensitivityTensor::identity_chi(cfg.tensor_c_s, cfg.tensor_eta);
  else if (cfg.tensor_kind == "rotational")
    sc.tensor = SensitivityTensor::rotational(cfg.tensor_c_s, cfg.tensor_eta);
  else if (cfg.tensor_kind == "custom-cutoff")
    sc.tensor = SensitivityTensor::state_rotation(cfg.tensor_c_s, cfg.tensor_eta);
  else
    throw std::invalid_argument("unknown tensor kind '" + cfg.tensor_kind + "'");

  if (cfg.phi_kind == "zero")
    sc.phi = Field(dom);
  else if (cfg.phi_kind != "linear_gravity")
    throw std::invalid_argument("unknown potential kind '" + cfg.phi_kind + "'");

  sc.fluid_model = cfg.fluid_model == "stokes" ? FluidModel::Stokes
                                               : FluidModel::NavierStokes;
  sc.dt = cfg.dt;
  sc.t_end = cfg.t_end;
  sc.output_every = cfg.output_every;
  return sc;
}

}  // namespace ksns
