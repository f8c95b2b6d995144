#include <cmath>

#include "doctest.h"
#include "ksns/quadrature.hpp"
#include "ksns/semigroup.hpp"

using namespace ksns;

namespace {

// Independent oracle: recursive adaptive Simpson with its own refinement
// logic, sharing nothing with the Gauss-Kronrod code under test.
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth > 48) return left + right;
  if (std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

template <class F>
double simpson(F&& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("closed forms") {
  auto sine = [](double x) { return std::sin(x); };
  CHECK(adaptive_quadrature(sine, 0.0, M_PI, 1e-12).value ==
        doctest::Approx(2.0).epsilon(1e-12));
  auto expo = [](double x) { return std::exp(x); };
  CHECK(adaptive_quadrature(expo, 0.0, 1.0, 1e-12).value ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  auto osc = [](double x) { return std::sin(10.0 * x); };
  CHECK(adaptive_quadrature(osc, 0.0, 10.0, 1e-12).value ==
        doctest::Approx((1.0 - std::cos(100.0)) / 10.0).epsilon(1e-11));
  CHECK_THROWS(adaptive_quadrature(sine, 1.0, 0.0, 1e-6));
}

TEST_CASE("agrees with an independent adaptive Simpson") {
  auto battery = {
      +[](double x) { return std::exp(-3.0 * x) * (1.0 + std::sqrt(x)); },
      +[](double x) { return 1.0 / (1.0 + 25.0 * x * x); },
      +[](double x) { return std::cos(7.0 * x) * std::exp(-x); },
      +[](double x) { return std::pow(x, 0.3) * std::log(1.0 + x); }};
  for (auto f : battery) {
    const double mine = adaptive_quadrature(f, 0.0, 4.0, 1e-11).value;
    const double ref = simpson(f, 0.0, 4.0, 1e-11);
    CHECK(mine == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("convolution bound rejects bad parameters") {
  CHECK_THROWS(convolution_bound(1.2, 0.5, 1, 2, 1.0));
  CHECK_THROWS(convolution_bound(0.5, 0.0, 1, 2, 1.0));
  CHECK_THROWS(convolution_bound(0.5, 0.5, 2, 2, 1.0));  // equal rates
  CHECK_THROWS(convolution_bound(0.5, 0.5, 1, 2, 0.0));
}

TEST_CASE("convolution integral has the reflection symmetry") {
  // substituting s -> t - s swaps (alpha,gamma) with (beta,delta)
  for (double t : {0.01, 0.5, 3.0}) {
    const ConvolutionCheck a = convolution_bound(0.3, 0.8, 1.0, 2.0, t);
    const ConvolutionCheck b = convolution_bound(0.8, 0.3, 2.0, 1.0, t);
    CHECK(a.integral == doctest::Approx(b.integral).epsilon(1e-8));
    CHECK(a.bound == doctest::Approx(b.bound).epsilon(1e-14));
  }
}

TEST_CASE("convolution integral against the Simpson oracle") {
  // moderate exponents so the raw integrand is integrable without
  // substitutions; the oracle integrates it directly on a split interval
  const double alpha = 0.4, beta = 0.6, gamma = 1.0, delta = 2.0, t = 1.5;
  auto raw = [&](double s) {
    return (1.0 + std::pow(s, -alpha)) * std::exp(-gamma * s) *
           (1.0 + std::pow(t - s, -beta)) * std::exp(-delta * (t - s));
  };
  // integrable endpoint singularities: clip a hair off each end and add the
  // analytic leading-order corrections from the pure power factors
  const double eps = 1e-10;
  double oracle = simpson(raw, eps, t - eps, 1e-12);
  // near s=0: (1+s^-a)(1+(t-s)^-b)e^{...} ~ s^-a (1+t^-b) e^{-dt};
  oracle += (1.0 + std::pow(t, -beta)) * std::exp(-delta * t) *
            (std::pow(eps, 1.0 - alpha) / (1.0 - alpha) + eps);
  oracle += (1.0 + std::pow(t, -alpha)) * std::exp(-gamma * t) *
            (std::pow(eps, 1.0 - beta) / (1.0 - beta) + eps);
  const ConvolutionCheck c = convolution_bound(alpha, beta, gamma, delta, t);
  CHECK(c.integral == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("self-consistency under tolerance halving") {
  const ConvolutionCheck a = convolution_bound(0.99, 0.99, 1.0, 2.0, 0.001, 1e-9);
  const ConvolutionCheck b =
      convolution_bound(0.99, 0.99, 1.0, 2.0, 0.001, 5e-10);
  CHECK(std::abs(a.integral - b.integral) <= 1e-9 * std::abs(a.integral));
}

}  // TEST_SUITE
