#include <cmath>

#include "doctest.h"
#include "ksns/diagnostics.hpp"
#include "ksns/duhamel.hpp"
#include "ksns/quadrature.hpp"
#include "presets.hpp"

using namespace ksns;

TEST_SUITE("duhamel") {

TEST_CASE("node ladder is geometric and lands on the horizon") {
  const auto nodes = mild_nodes(20.0, 64);
  CHECK(nodes.size() == 64);
  CHECK(nodes.front() == 0.0);
  CHECK(nodes[1] == doctest::Approx(0.02).epsilon(1e-12));  // 1e-3 * t_end
  CHECK(nodes.back() == doctest::Approx(20.0).epsilon(1e-14));
  for (size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i] > nodes[i - 1]);
  CHECK_THROWS(mild_nodes(0.0));
  CHECK_THROWS(mild_nodes(1.0, 2));
}

TEST_CASE("segment kernel weights match direct quadrature") {
  // phi_a(z) = int_0^1 e^{-z(1-s)} s ds, phi_b the (1-s) moment.  The
  // quadrature oracle is independent of both closed form and series branch;
  // the series truncation near the z = 1e-2 switch is below 1e-10.
  for (double z : {1e-6, 1e-3, 9.9e-3, 1.01e-2, 0.5, 3.0, 30.0}) {
    double pa, pb;
    detail::hat_moments(z, pa, pb);
    auto fa = [&](double s) { return std::exp(-z * (1.0 - s)) * s; };
    auto fb = [&](double s) { return std::exp(-z * (1.0 - s)) * (1.0 - s); };
    const double qa = adaptive_quadrature(fa, 0.0, 1.0, 1e-13).value;
    const double qb = adaptive_quadrature(fb, 0.0, 1.0, 1e-13).value;
    CHECK(std::abs(pa - qa) <= 5e-10);
    CHECK(std::abs(pb - qb) <= 5e-10);
  }
}

TEST_CASE("weights of both branches sum to the plain kernel moment") {
  // phi_a + phi_b = int_0^1 e^{-z(1-s)} ds = (1 - e^-z)/z on either branch.
  for (double z : {1e-5, 5e-3, 0.0099, 0.0101, 0.3, 2.0, 12.0}) {
    double pa, pb;
    detail::hat_moments(z, pa, pb);
    const double total = (1.0 - std::exp(-z)) / z;
    CHECK(std::abs(pa + pb - total) <= 1e-9);
  }
}

TEST_CASE("linear scenario: solver nodes match closed forms") {
  const BoxDomain dom = BoxDomain::cube(2, 32, M_PI);
  Scenario sc = linear_decoupled_scenario(dom, 1.0);
  MildSolver solver(sc, mild_nodes(1.0, 48));
  const PicardResult pr = solver.solve();
  CHECK(pr.converged);
  SpectralCell<double> plan(dom);
  const auto& nodes = solver.nodes();
  const Eigen::ArrayXd c0h = plan.to_modes(sc.c0);
  for (size_t j : {size_t(10), size_t(30), nodes.size() - 1}) {
    const double t = nodes[j];
    // m stays exactly 1; rho stays 0; c = e^{-t} heat(c0) + (1 - e^{-t})
    CHECK((pr.iterate.m[j].values - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(pr.iterate.rho_at(j).values.abs().maxCoeff() <= 1e-12);
    Field cref =
        plan.from_modes((c0h * (-t * plan.eigenvalues()).exp()).eval());
    cref.values = std::exp(-t) * cref.values + (1.0 - std::exp(-t));
    CHECK((pr.iterate.c[j].values - cref.values).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("picard iterations contract on the short horizon") {
  Scenario sc =
      make_preset("sperm_excess", BoxDomain::cube(2, 24, M_PI), 0.05, 5);
  const PicardResult pr = picard_solve(sc, 0.25, 48);
  CHECK(pr.converged);
  const size_t upto = std::min<size_t>(6, pr.dists.size());
  REQUIRE(upto >= 4);
  for (size_t k = 1; k < upto; ++k) {
    CHECK(pr.dists[k] < pr.dists[k - 1]);
    CHECK(pr.dists[k] / pr.dists[k - 1] < 0.6);
  }
}

TEST_CASE("cross validation: stepper and mild solution agree") {
  Scenario sc =
      make_preset("sperm_excess", BoxDomain::cube(2, 32, M_PI), 0.02, 7);
  const CrossValidation cv = cross_validate(sc, 0.25, 48);
  CHECK(cv.picard_converged);
  CHECK(!cv.outside_contraction);
  CHECK(cv.passed);
  REQUIRE(cv.fields.size() == 5);  // rho-m, m, c, u0, u1
  for (const auto& f : cv.fields) {
    CHECK(f.passed);
    CHECK(f.disagreement <= f.tolerance);
    CHECK(f.tolerance >= 1e-8);  // absolute floor
  }
  CHECK(cv.dt_coarse > 0.0);
  CHECK(std::abs(cv.t_end / cv.dt_coarse -
                 std::round(cv.t_end / cv.dt_coarse)) <= 1e-9);
}

TEST_CASE("weight profile vanishes at zero and rises past the knee") {
  for (double sigma : {0.45, 0.5, 0.2}) {
    double prev = WeightedNormTrack::weight(1.0, sigma, 0.8);
    for (double t = 1.25; t <= 10.0; t += 0.25) {
      const double w = WeightedNormTrack::weight(t, sigma, 0.8);
      CHECK(w > prev);
      prev = w;
    }
  }
  CHECK(WeightedNormTrack::weight(0.0, 0.5, 0.8) == 0.0);
  CHECK(WeightedNormTrack::weight(-1.0, 0.5, 0.8) == 0.0);
  // at fixed t the weight grows with the rate it absorbs
  CHECK(WeightedNormTrack::weight(2.0, 0.5, 0.9) >
        WeightedNormTrack::weight(2.0, 0.5, 0.3));
}

TEST_CASE("weighted norms stay bounded along a decaying run") {
  Scenario sc =
      make_preset("sperm_excess", BoxDomain::cube(2, 24, M_PI), 0.02, 3);
  sc.t_end = 8.0;
  RunOptions opt;
  opt.keep_states = true;
  const RunResult res = run(sc, opt);
  REQUIRE(!res.states.empty());
  WeightedNormParams wp;
  wp.alpha1 = 0.8 * predicted_alpha1(sc);
  wp.alpha2 = 0.8 * std::min(wp.alpha1, 1.0);
  REQUIRE(wp.alpha1 > 0.0);
  WeightedNormTrack track;
  for (const State& s : res.states)
    track.absorb(wp, s.t, s, res.rho_inf, res.m_inf);
  CHECK(std::isfinite(track.diff));
  CHECK(std::isfinite(track.grad_c));
  CHECK(std::isfinite(track.vel));
  CHECK(std::isfinite(track.grad_u));
  CHECK(track.diff > 0.0);
}

}  // TEST_SUITE
