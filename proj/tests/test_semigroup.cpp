#include <random>

#include "doctest.h"
#include "ksns/semigroup.hpp"

using namespace ksns;

namespace {

// Independent heat-flow oracle: explicit mode sums with a basis sampled
// directly from cosines, O(N^2), sharing nothing with SpectralCell.
Field naive_heat(const Field& f, double t) {
  const BoxDomain& dom = f.domain;
  const int n0 = dom.cells(0), n1 = dom.cells(1);
  Field out(dom);
  for (int k0 = 0; k0 < n0; ++k0)
    for (int k1 = 0; k1 < n1; ++k1) {
      const double a0 = k0 == 0 ? 1.0 / n0 : 2.0 / n0;
      const double a1 = k1 == 0 ? 1.0 / n1 : 2.0 / n1;
      double coeff = 0.0;
      for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1)
          coeff += f.values[dom.cell_index(i0, i1, 0)] *
                   std::cos(M_PI * k0 * (i0 + 0.5) / n0) *
                   std::cos(M_PI * k1 * (i1 + 0.5) / n1);
      const double h0 = dom.spacing(0), h1 = dom.spacing(1);
      const double lam = 2.0 / (h0 * h0) * (1.0 - std::cos(M_PI * k0 / n0)) +
                         2.0 / (h1 * h1) * (1.0 - std::cos(M_PI * k1 / n1));
      const double decayed = a0 * a1 * coeff * std::exp(-lam * t);
      for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1)
          out.values[dom.cell_index(i0, i1, 0)] +=
              decayed * std::cos(M_PI * k0 * (i0 + 0.5) / n0) *
              std::cos(M_PI * k1 * (i1 + 0.5) / n1);
    }
  return out;
}

}  // namespace

TEST_SUITE("semigroup") {

TEST_CASE("heat flow matches the explicit mode-sum oracle") {
  const BoxDomain dom(2, {12, 11, 1}, {1.0, 1.1, 1.0});
  const Field f = random_smooth_probe(dom, 7);
  for (double t : {0.01, 0.3}) {
    const Field fast = heat_apply(f, t);
    const Field slow = naive_heat(f, t);
    CHECK((fast.values - slow.values).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("slowest eigenmode decays at exactly the discrete rate") {
  const BoxDomain dom = BoxDomain::cube(2, 64, M_PI);
  const Field f = eigenmode_probe(dom, {1, 0, 0});
  const double t = 0.7;
  const Field ft = heat_apply(f, t);
  const double ratio = lp_norm(ft, INFINITY) / lp_norm(f, INFINITY);
  const double measured = -std::log(ratio) / t;
  CHECK(measured ==
        doctest::Approx(dom.lambda1_discrete()).epsilon(1e-12));
}

TEST_CASE("sigma exponents follow the smoothing dictionary") {
  // d/2*(1/q-1/p) base, +1/2 per gradient, matching the decay estimates
  CHECK(decay_sigma(DecayVariant::Smoothing, 2, INFINITY, 1.0) ==
        doctest::Approx(1.0));
  CHECK(decay_sigma(DecayVariant::Smoothing, 3, INFINITY, 1.0) ==
        doctest::Approx(1.5));
  CHECK(decay_sigma(DecayVariant::Smoothing, 2, 2.0, 1.0) ==
        doctest::Approx(0.5));
  CHECK(decay_sigma(DecayVariant::GradientSmoothing, 2, INFINITY, 1.0) ==
        doctest::Approx(1.5));
  // gradient-to-gradient carries no extra half power; divergence source does
  CHECK(decay_sigma(DecayVariant::GradientToGradient, 2, 2.0, 1.0) ==
        doctest::Approx(0.5));
  CHECK(decay_sigma(DecayVariant::DivergenceSource, 2, 2.0, 2.0) ==
        doctest::Approx(0.5));
}

TEST_CASE("decay bounds hold on the standard probes") {
  const BoxDomain dom = BoxDomain::cube(2, 32, M_PI);
  const auto times = standard_time_lattice(dom, 21);
  for (auto [p, q] : {std::pair{INFINITY, 1.0}, {2.0, 1.0}, {INFINITY, 2.0}}) {
    const auto rep = verify_lp_lq(DecayVariant::Smoothing, p, q,
                                  standard_scalar_probes(dom, 3, true), times);
    CHECK(rep.passed);
    CHECK(std::isfinite(rep.measured_ratio));
    for (const auto& row : rep.rows) CHECK(std::isfinite(row.ratio));
  }
  const auto grad = verify_lp_lq(DecayVariant::GradientSmoothing, INFINITY, 2.0,
                                 standard_scalar_probes(dom, 5, false), times);
  CHECK(grad.passed);
  const auto g2g = verify_lp_lq(DecayVariant::GradientToGradient, 2.0, 2.0,
                                standard_scalar_probes(dom, 6, false), times);
  CHECK(g2g.passed);
  const auto divsrc = verify_lp_lq_divergence(
      2.0, 2.0, standard_staggered_probes(dom, 8), times);
  CHECK(divsrc.passed);
}

TEST_CASE("smoothing variant insists on mean-zero probes") {
  const BoxDomain dom = BoxDomain::cube(2, 16, 1.0);
  std::vector<Field> probes = {gaussian_bump_probe(dom, {0.5, 0.5, 0.5}, 2.0)};
  const std::vector<double> times = {0.1, 1.0};
  CHECK_THROWS(verify_lp_lq(DecayVariant::Smoothing, INFINITY, 1.0, probes,
                            times));
}

TEST_CASE("norm order preconditions") {
  const BoxDomain dom = BoxDomain::cube(2, 16, 1.0);
  const auto probes = standard_scalar_probes(dom, 4, true);
  const std::vector<double> times = {0.1};
  CHECK_THROWS(verify_lp_lq(DecayVariant::Smoothing, 1.0, 2.0, probes, times));
  CHECK_THROWS(verify_lp_lq(DecayVariant::Smoothing, 2.0, 0.5, probes, times));
}

}  // TEST_SUITE
