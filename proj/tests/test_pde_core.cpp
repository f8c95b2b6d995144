#include <random>

#include "doctest.h"
#include "ksns/pde_core.hpp"
#include "presets.hpp"

using namespace ksns;

namespace {

Scenario small_sperm(int n, double eps, double t_end) {
  Scenario sc = make_preset("sperm_excess", BoxDomain::cube(2, n, M_PI), eps, 3);
  sc.t_end = t_end;
  return sc;
}

double sup_diff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  return (a - b).abs().maxCoeff();
}

double state_sup_change(const State& a, const State& b, int dim) {
  double s = sup_diff(a.rho.values, b.rho.values);
  s = std::max(s, sup_diff(a.m.values, b.m.values));
  s = std::max(s, sup_diff(a.c.values, b.c.values));
  for (int ax = 0; ax < dim; ++ax)
    s = std::max(s, sup_diff(a.u.comp[ax], b.u.comp[ax]));
  return s;
}

}  // namespace

TEST_SUITE("pde_core") {

TEST_CASE("projection: idempotent, kills gradients, never expands") {
  const BoxDomain dom(2, {24, 20, 1}, {1.2, 1.0, 1.0});
  SpectralCell<double> plan(dom);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorField v(dom);
  for (int a = 0; a < 2; ++a)
    for (long i = 0; i < v.comp[a].size(); ++i) v.comp[a][i] = g(rng);
  zero_boundary_faces(v);

  const auto [pv, q] = leray_project(v, plan);
  CHECK(max_abs_divergence(pv) <= 1e-10 * face_linf(v));
  const auto [ppv, q2] = leray_project(pv, plan);
  for (int a = 0; a < 2; ++a)
    CHECK(sup_diff(ppv.comp[a], pv.comp[a]) <= 1e-10 * face_linf(v));
  // discrete gradients project to (near) zero
  Field s = sample_cells(dom, [](double x, double y, double) {
    return std::cos(2 * x) * std::cos(y);
  });
  const auto [pg, q3] = leray_project(gradient(s), plan);
  CHECK(face_linf(pg) <= 1e-8 * face_linf(gradient(s)));
  // L2 non-expansion
  CHECK(face_inner(pv, pv) <= face_inner(v, v) * (1 + 1e-6));
}

TEST_CASE("equilibria are fixed points, arbitrary potential included") {
  for (const char* name : {"sperm_excess", "egg_excess", "balanced"}) {
    Scenario sc = make_preset(name, BoxDomain::cube(2, 24, M_PI), 0.0, 1);
    // skew, nonlinear potential: buoyancy of a constant density is still a
    // discrete gradient, so the projection must kill it exactly
    sc.phi = sample_cells(sc.domain, [](double x, double y, double) {
      return 0.7 * std::cos(x) * std::cos(2 * y) - 0.2 * y;
    });
    sc.dt = 0.01;
    Stepper st(sc);
    State s = st.initial_state();
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const State prev = s;
      st.advance(s, sc.dt);
      worst = std::max(worst, state_sup_change(s, prev, 2) / sc.dt);
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("identical initial densities stay identical without chemotaxis") {
  Scenario sc = small_sperm(20, 0.05, 0.0);
  sc.tensor = SensitivityTensor::zero();
  sc.m0 = sc.rho0;  // same data, same dynamics, reaction is symmetric
  sc.dt = 0.01;
  Stepper st(sc);
  State s = st.initial_state();
  for (int k = 0; k < 60; ++k) st.advance(s, sc.dt);
  CHECK(sup_diff(s.rho.values, s.m.values) <= 1e-12);
}

TEST_CASE("chemotaxis flux converges at first order to the smooth flux") {
  // rho, c smooth; identity tensor chi=0.7: exact flux is chi * rho grad c
  double prev_err = 0.0;
  std::vector<double> errs;
  for (int n : {16, 32, 64}) {
    const BoxDomain dom = BoxDomain::cube(2, n, M_PI);
    const Field rho = sample_cells(dom, [](double x, double y, double) {
      return 2.0 + std::cos(x) * std::cos(y);
    });
    const Field c = sample_cells(dom, [](double x, double y, double) {
      return std::cos(2 * x) + std::cos(y);
    });
    const VectorField flux =
        chemotaxis_flux(rho, c, SensitivityTensor::identity_chi(0.7, 0.0));
    double err = 0.0;
    const auto e = dom.face_extents(0);
    for (int i = 1; i + 1 < e[0]; ++i)
      for (int j = 0; j < e[1]; ++j) {
        const double x = dom.face_x(0, i), y = dom.cell_x(1, j);
        const double exact =
            0.7 * (2.0 + std::cos(x) * std::cos(y)) * (-2.0 * std::sin(2 * x));
        err = std::max(err, std::abs(flux.at(0, i, j) - exact));
      }
    errs.push_back(err);
    if (prev_err > 0.0) {
      const double ratio = prev_err / err;
      CHECK(ratio > 1.6);  // first order in h, allow pre-asymptotic wiggle
      CHECK(ratio < 2.6);
    }
    prev_err = err;
  }
}

TEST_CASE("flux respects the spectral-norm cap") {
  const BoxDomain dom = BoxDomain::cube(2, 16, M_PI);
  const Field rho = sample_cells(dom, [](double x, double, double) {
    return 1.0 + 0.5 * std::cos(x);
  });
  const Field c = sample_cells(dom, [](double, double y, double) {
    return std::cos(y);
  });
  // |S| <= chi by construction for all three nonzero families
  for (auto tensor :
       {SensitivityTensor::identity_chi(0.5, 0.1),
        SensitivityTensor::rotational(0.5, 0.1),
        SensitivityTensor::state_rotation(0.5, 0.1)}) {
    CHECK(tensor.bound() == doctest::Approx(0.5));
    const VectorField flux = chemotaxis_flux(rho, c, tensor);
    CHECK(face_linf(flux) <= 0.5 * (1.0 + 0.5) * 1.0 * (1 + 1e-9) +
                                 1e-12);  // chi * max rho * max |grad c|
  }
}

TEST_CASE("reaction budget equals the mass drop exactly") {
  Scenario sc = small_sperm(24, 0.1, 1.0);
  Stepper st(sc);
  State s = st.initial_state();
  const double mass0 = mass(s.rho);
  for (int k = 0; k < 50; ++k) st.advance(s, 0.02);
  CHECK(st.reaction_budget() ==
        doctest::Approx(mass0 - mass(s.rho)).epsilon(1e-12));
}

TEST_CASE("watchdog interrupts a diverging run") {
  // a fixed step far above the reaction stability bound makes the explicit
  // reaction update oscillate with growth; the watchdog must cut it short
  Scenario sc = make_preset("egg_excess", BoxDomain::cube(2, 16, M_PI), 0.1, 1);
  sc.t_end = 50.0;
  sc.dt = 4.0;
  sc.output_every = 50.0;
  RunOptions opt;
  opt.watchdog_factor = 1.0 + 1e-9;
  const RunResult res = run(sc, opt);
  CHECK(res.blew_up);
  CHECK(res.t_reached < sc.t_end);
  CHECK(!res.rows.empty());
}

TEST_CASE("zero horizon produces exactly the initial row") {
  Scenario sc = small_sperm(16, 0.05, 0.0);
  const RunResult res = run(sc);
  CHECK(res.rows.size() == 1);
  CHECK(res.rows.front().t == 0.0);
  CHECK(res.steps == 0);
}

TEST_CASE("fixed step size is honored exactly") {
  Scenario sc = small_sperm(16, 0.05, 0.1);
  sc.dt = 0.04;  // does not divide t_end: 0.04, 0.04, 0.02
  const RunResult res = run(sc);
  CHECK(res.steps == 3);
  CHECK(res.rows.back().t == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("advection alone conserves each scalar mass") {
  Scenario sc = small_sperm(24, 0.1, 0.0);
  sc.tensor = SensitivityTensor::zero();
  sc.m0 = Field(sc.domain);  // no eggs: reaction vanishes identically
  sc.require_nontrivial = false;
  SpectralCell<double> plan(sc.domain);
  sc.u0 = leray_project(swirl_velocity(sc.domain), plan).first;
  for (int a = 0; a < 2; ++a) sc.u0.comp[a] *= 0.5;
  Stepper st(sc);
  State s = st.initial_state();
  const double mr = mass(s.rho), mc = mass(s.c);
  double elapsed = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double dt = st.cfl_dt(s);
    st.advance(s, dt);
    elapsed += dt;
  }
  CHECK(mass(s.rho) == doctest::Approx(mr).epsilon(1e-12));
  // transport conserves the chemical's mass; its own unit damping does not
  CHECK(mass(s.c) ==
        doctest::Approx(mc * std::exp(-elapsed)).epsilon(1e-12));
  CHECK(s.rho.values.minCoeff() >= -1e-10);
}

TEST_CASE("three dimensional smoke run") {
  Scenario sc = make_preset("sperm_excess", BoxDomain::cube(3, 10, M_PI), 0.05, 9);
  sc.t_end = 0.3;
  sc.output_every = 0.1;
  const RunResult res = run(sc);
  CHECK(!res.blew_up);
  const DiagRow& r0 = res.rows.front();
  const DiagRow& r1 = res.rows.back();
  CHECK(std::abs(r1.mass_diff - r0.mass_diff) <= 1e-10 * std::abs(r0.mass_diff));
  CHECK(r1.max_div <= 1e-8);
  CHECK(r1.min_rho >= -1e-10);
  CHECK(r1.max_m <= r0.max_m * (1 + 1e-12));
}

TEST_CASE("diffusion budget margins tighten when dt halves") {
  // (2.3)/(2.5)-style budgets: violations (positive margins) must at least
  // halve with dt; both are structurally nonpositive here, which halving
  // trivially preserves — assert the sign and the scaling guard together
  auto margins = [](double dt) {
    Scenario sc = small_sperm(20, 0.1, 1.0);
    sc.dt = dt;
    const RunResult res = run(sc);
    const DiagRow& last = res.rows.back();
    const DiagRow& first = res.rows.front();
    const double reaction_violation = std::max(
        0.0, last.reaction_budget -
                 std::min(first.mass_rho, first.mass_m));
    const double energy_violation =
        std::max(0.0, last.l2_m_sq + last.grad_m_budget -
                          first.l2_m_sq * (1 + 1e-6));
    return std::pair{reaction_violation, energy_violation};
  };
  const auto [ra, ea] = margins(0.02);
  const auto [rb, eb] = margins(0.01);
  CHECK(rb <= 0.5 * ra + 1e-15);
  CHECK(eb <= 0.5 * ea + 1e-15);
}

TEST_CASE("snapshots land on disk and read back") {
  Scenario sc = small_sperm(12, 0.05, 0.1);
  sc.output_every = 0.05;
  RunOptions opt;
  opt.out_dir = "/tmp/ksns_test_run_out";
  std::filesystem::remove_all(opt.out_dir);
  const RunResult res = run(sc, opt);
  const Snapshot snap =
      read_snapshot(std::string(opt.out_dir) + "/snap_99999_rho.bin");
  const Field back = snap.as_field();
  CHECK((back.values == res.final_state.rho.values).all());
  CHECK(std::filesystem::exists(std::string(opt.out_dir) + "/diagnostics.csv"));
  std::filesystem::remove_all(opt.out_dir);
}

TEST_CASE("scenario validation rejects broken inputs") {
  Scenario sc = small_sperm(16, 0.05, 1.0);
  Scenario bad = sc;
  bad.rho0.values[3] = -0.2;
  CHECK_THROWS(Stepper{bad});
  bad = sc;
  bad.rho0.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(Stepper{bad});
  bad = sc;
  bad.u0.comp[0][bad.u0.comp[0].size() / 2] += 1.0;  // breaks divergence
  CHECK_THROWS(Stepper{bad});
  bad = sc;
  bad.t_end = -1.0;
  CHECK_THROWS(Stepper{bad});
  bad = sc;
  bad.rho0.values.setZero();  // nontrivial data required when epsilon > 0
  CHECK_THROWS(Stepper{bad});
}

}  // TEST_SUITE
