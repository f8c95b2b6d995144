#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ksns/operators.hpp"
#include "ksns/quadrature.hpp"
#include "ksns/transforms.hpp"

namespace ksns {

// Neumann heat propagator on the box, plus the empirical L^p-L^q decay
// inequalities the analysis layer leans on.  The propagator is the exact
// flow of the grid Laplacian (full cosine basis, multiplier exp(-t lambda)),
// so mean is conserved exactly, positivity holds to round-off, and a cosine
// eigenmode decays at exactly exp(-t lambda_k).

struct SpectralInfo {
  int dim = 0;
  std::array<int, 3> modes{};   // full basis: one mode per cell along each axis
  double lambda1 = 0.0;         // continuum min_a (pi/L_a)^2
  double lambda1_discrete = 0.0;
};

inline SpectralInfo make_spectral_info(const BoxDomain& dom) {
  SpectralInfo s;
  s.dim = dom.dim();
  s.modes = dom.cells();
  s.lambda1 = dom.lambda1();
  s.lambda1_discrete = dom.lambda1_discrete();
  return s;
}

// Per-thread plan cache: rebuilding the dense transform on every call would
// dominate tight loops; callers that need explicit control hold their own
// SpectralCell.
inline const SpectralCell<double>& cell_plan(const BoxDomain& dom) {
  thread_local std::unique_ptr<SpectralCell<double>> plan;
  if (!plan || plan->domain() != dom)
    plan = std::make_unique<SpectralCell<double>>(dom);
  return *plan;
}

inline Field heat_apply(const Field& f, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat_apply: need t >= 0");
  if (t == 0.0) return f;
  return cell_plan(f.domain).heat(f, t);
}

// ---- L^p-L^q decay inequalities --------------------------------------------

enum class DecayVariant {
  Smoothing,           // |e^{tL} w|_p vs |w|_q, mean-zero w
  GradientSmoothing,   // |grad e^{tL} w|_p vs |w|_q
  GradientToGradient,  // |grad e^{tL} w|_p vs |grad w|_q
  DivergenceSource     // |e^{tL} div w|_p vs |w|_q, staggered w
};

inline const char* variant_name(DecayVariant v) {
  switch (v) {
    case DecayVariant::Smoothing: return "smoothing";
    case DecayVariant::GradientSmoothing: return "gradient_smoothing";
    case DecayVariant::GradientToGradient: return "gradient_to_gradient";
    case DecayVariant::DivergenceSource: return "divergence_source";
  }
  return "?";
}

// Singularity exponent of the reference envelope (1 + t^{-sigma}) e^{-lambda1 t}.
inline double decay_sigma(DecayVariant v, int dim, double p, double q) {
  const double pi = std::isinf(p) ? 0.0 : 1.0 / p;
  const double qi = std::isinf(q) ? 0.0 : 1.0 / q;
  const double jump = 0.5 * dim * (qi - pi);
  switch (v) {
    case DecayVariant::Smoothing: return jump;
    case DecayVariant::GradientSmoothing: return jump + 0.5;
    case DecayVariant::GradientToGradient: return jump;
    case DecayVariant::DivergenceSource: return jump + 0.5;
  }
  return 0.0;
}

struct BoundProbeRow {
  int probe = 0;
  double t = 0.0;
  double ratio = 0.0;
};

struct BoundCheckReport {
  DecayVariant variant{};
  double p = 0.0, q = 0.0;
  double sigma = 0.0;
  double lambda1_used = 0.0;    // discrete lambda1: the flow is the grid flow
  double measured_ratio = 0.0;  // sup over probes x times
  double tail_growth = 0.0;     // ratio drift across the last lattice points
  bool passed = false;
  std::vector<BoundProbeRow> rows;
};

namespace detail {

inline double envelope(double sigma, double lambda1, double t) {
  return (1.0 + std::pow(t, -sigma)) * std::exp(-lambda1 * t);
}

inline BoundCheckReport finish_report(BoundCheckReport rep,
                                      const std::vector<double>& times,
                                      int n_probes) {
  rep.measured_ratio = 0.0;
  bool finite = true;
  for (const auto& r : rep.rows) {
    if (!std::isfinite(r.ratio)) finite = false;
    rep.measured_ratio = std::max(rep.measured_ratio, r.ratio);
  }
  // Growth at the tail of the time lattice would mean the exponential part
  // of the envelope is wrong; compare each probe's last ratio against its
  // value a few lattice points earlier.  A field decaying exactly at
  // lambda1 still drifts up by the envelope's draining algebraic cushion
  // (1 + t^-sigma), so that much drift is expected and allowed.
  double growth = 0.0;
  const int nt = static_cast<int>(times.size());
  const int back = std::min(4, nt - 1);
  for (int pr = 0; pr < n_probes; ++pr) {
    const double last = rep.rows[pr * nt + nt - 1].ratio;
    const double ref = rep.rows[pr * nt + nt - 1 - back].ratio;
    if (ref > 1e-250) growth = std::max(growth, last / ref);
  }
  const double cushion = (1.0 + std::pow(times[nt - 1 - back], -rep.sigma)) /
                         (1.0 + std::pow(times[nt - 1], -rep.sigma));
  rep.tail_growth = growth;
  rep.passed = finite && growth <= 1.1 * cushion;
  return rep;
}

}  // namespace detail

// Scalar-probe variants.  Probes for Smoothing must be mean-zero (the
// envelope has no room for the conserved mean).
inline BoundCheckReport verify_lp_lq(DecayVariant variant, double p, double q,
                                     const std::vector<Field>& probes,
                                     const std::vector<double>& times) {
  if (variant == DecayVariant::DivergenceSource)
    throw std::invalid_argument(
        "verify_lp_lq: divergence variant takes staggered probes; use "
        "verify_lp_lq_divergence");
  if (probes.empty() || times.empty())
    throw std::invalid_argument("verify_lp_lq: need probes and times");
  if (!(p >= q && q >= 1.0))
    throw std::invalid_argument("verify_lp_lq: need p >= q >= 1");
  const BoxDomain& dom = probes.front().domain;
  BoundCheckReport rep;
  rep.variant = variant;
  rep.p = p;
  rep.q = q;
  rep.sigma = decay_sigma(variant, dom.dim(), p, q);
  rep.lambda1_used = dom.lambda1_discrete();
  const SpectralCell<double>& plan = cell_plan(dom);
  const Eigen::ArrayXd& lam = plan.eigenvalues();
  Eigen::Index mode0 = 0;
  lam.minCoeff(&mode0);

  int pid = 0;
  for (const auto& w : probes) {
    require_same_domain(w.domain, dom, "verify_lp_lq");
    if (variant == DecayVariant::Smoothing &&
        std::abs(mean(w)) > 1e-10 * (1.0 + lp_norm(w, INFINITY)))
      throw std::invalid_argument(
          "verify_lp_lq: smoothing variant requires mean-zero probes");
    Eigen::ArrayXd wh = plan.to_modes(w);
    // The conserved mode of a mean-zero probe is pure round-off, but it
    // does not decay, so at the tail of the lattice it would swamp the
    // e^{-lambda1 t} envelope.  Remove it exactly.
    if (variant == DecayVariant::Smoothing) wh[mode0] = 0.0;
    const double den_base = variant == DecayVariant::GradientToGradient
                                ? lp_norm(gradient(w), q)
                                : lp_norm(w, q);
    for (double t : times) {
      const Field ft = plan.from_modes((wh * (-t * lam).exp()).eval());
      const double num = variant == DecayVariant::Smoothing
                             ? lp_norm(ft, p)
                             : lp_norm(gradient(ft), p);
      const double den =
          den_base * detail::envelope(rep.sigma, rep.lambda1_used, t);
      double ratio;
      if (den > 0.0)
        ratio = num / den;
      else
        ratio = num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      rep.rows.push_back({pid, t, ratio});
    }
    ++pid;
  }
  return detail::finish_report(std::move(rep), times,
                               static_cast<int>(probes.size()));
}

// Divergence-source variant on face-staggered probes.
inline BoundCheckReport verify_lp_lq_divergence(
    double p, double q, const std::vector<VectorField>& probes,
    const std::vector<double>& times) {
  if (probes.empty() || times.empty())
    throw std::invalid_argument("verify_lp_lq_divergence: need probes, times");
  if (!(p >= q && q >= 1.0))
    throw std::invalid_argument("verify_lp_lq_divergence: need p >= q >= 1");
  const BoxDomain& dom = probes.front().domain;
  BoundCheckReport rep;
  rep.variant = DecayVariant::DivergenceSource;
  rep.p = p;
  rep.q = q;
  rep.sigma = decay_sigma(rep.variant, dom.dim(), p, q);
  rep.lambda1_used = dom.lambda1_discrete();
  const SpectralCell<double>& plan = cell_plan(dom);
  const Eigen::ArrayXd& lam = plan.eigenvalues();
  Eigen::Index mode0 = 0;
  lam.minCoeff(&mode0);

  int pid = 0;
  for (const auto& w : probes) {
    require_same_domain(w.domain, dom, "verify_lp_lq_divergence");
    const double den_base = lp_norm(w, q);
    const Field dw = divergence(w);
    // div of a no-normal-flux field telescopes to zero total mass; zero the
    // conserved coefficient so transform round-off cannot outlive the decay.
    Eigen::ArrayXd dh = plan.to_modes(dw);
    dh[mode0] = 0.0;
    for (double t : times) {
      const double num =
          lp_norm(plan.from_modes((dh * (-t * lam).exp()).eval()), p);
      const double den =
          den_base * detail::envelope(rep.sigma, rep.lambda1_used, t);
      double ratio;
      if (den > 0.0)
        ratio = num / den;
      else
        ratio = num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      rep.rows.push_back({pid, t, ratio});
    }
    ++pid;
  }
  return detail::finish_report(std::move(rep), times,
                               static_cast<int>(probes.size()));
}

// ---- standard probe families ------------------------------------------------

// Exact grid eigenmode: product of per-axis cosines at cell centers.
inline Field eigenmode_probe(const BoxDomain& dom, std::array<int, 3> k) {
  return sample_cells(dom, [&](double x, double y, double z) {
    double v = std::cos(M_PI * k[0] * x / dom.length(0)) *
               std::cos(M_PI * k[1] * y / dom.length(1));
    if (dom.dim() == 3) v *= std::cos(M_PI * k[2] * z / dom.length(2));
    return v;
  });
}

inline Field gaussian_bump_probe(const BoxDomain& dom,
                                 std::array<double, 3> center_frac,
                                 double width_cells) {
  const double w = width_cells * dom.min_spacing();
  return sample_cells(dom, [&](double x, double y, double z) {
    double r2 = 0.0;
    const double cx = center_frac[0] * dom.length(0);
    const double cy = center_frac[1] * dom.length(1);
    r2 += (x - cx) * (x - cx) + (y - cy) * (y - cy);
    if (dom.dim() == 3) {
      const double cz = center_frac[2] * dom.length(2);
      r2 += (z - cz) * (z - cz);
    }
    return std::exp(-r2 / (2.0 * w * w));
  });
}

// Random low-mode cosine mixture, seeded; coefficients fall off like 1/|k|^2.
inline Field random_smooth_probe(const BoxDomain& dom, unsigned long seed,
                                 int max_mode = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field out(dom);
  const int kz_max = dom.dim() == 3 ? max_mode : 0;
  for (int kx = 0; kx <= max_mode; ++kx)
    for (int ky = 0; ky <= max_mode; ++ky)
      for (int kz = 0; kz <= kz_max; ++kz) {
        const double a =
            gauss(rng) / (1.0 + kx * kx + ky * ky + kz * kz);
        if (kx + ky + kz == 0) continue;  // keep the mean out
        out.values += a * eigenmode_probe(dom, {kx, ky, kz}).values;
      }
  return out;
}

// Scalar probe set: exact modes, a random mixture, two narrow bumps.
// mean_zero recenters the non-eigenmode probes (Smoothing variant).
inline std::vector<Field> standard_scalar_probes(const BoxDomain& dom,
                                                 unsigned long seed,
                                                 bool mean_zero) {
  std::vector<Field> probes;
  probes.push_back(eigenmode_probe(dom, {1, 0, 0}));
  probes.push_back(eigenmode_probe(dom, {1, 1, dom.dim() == 3 ? 1 : 0}));
  probes.push_back(eigenmode_probe(dom, {3, 2, 0}));
  probes.push_back(random_smooth_probe(dom, seed));
  probes.push_back(gaussian_bump_probe(dom, {0.37, 0.41, 0.5}, 2.0));
  probes.push_back(gaussian_bump_probe(dom, {0.61, 0.58, 0.42}, 3.0));
  if (mean_zero)
    for (auto& f : probes) f.values -= mean(f);
  return probes;
}

// Staggered probe set for the divergence variant: gradients of smooth
// scalars plus a clamped random staggered field (zero normal faces).
inline std::vector<VectorField> standard_staggered_probes(const BoxDomain& dom,
                                                          unsigned long seed) {
  std::vector<VectorField> probes;
  probes.push_back(gradient(gaussian_bump_probe(dom, {0.45, 0.55, 0.5}, 3.0)));
  probes.push_back(gradient(random_smooth_probe(dom, seed + 1)));
  VectorField w(dom);
  std::mt19937_64 rng(seed + 2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int a = 0; a < dom.dim(); ++a)
    for (long i = 0; i < w.comp[a].size(); ++i) w.comp[a][i] = gauss(rng);
  // smooth it so the probe is not pure grid noise
  for (int a = 0; a < dom.dim(); ++a) {
    SpectralFace<double> plan(dom, a);
    w.comp[a] = plan.flow(w.comp[a], 4.0 * dom.min_spacing() * dom.min_spacing());
  }
  zero_boundary_faces(w);
  probes.push_back(std::move(w));
  return probes;
}

// Log-spaced lattice covering the envelope's singular end and several decay
// times of the slowest mode.
inline std::vector<double> standard_time_lattice(const BoxDomain& dom,
                                                 int count = 25) {
  const double t0 = 1e-3;
  const double t1 = 100.0 / dom.lambda1();
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i)
    t[i] = t0 * std::pow(t1 / t0, static_cast<double>(i) / (count - 1));
  return t;
}

// ---- singular-kernel convolution bound --------------------------------------

struct ConvolutionCheck {
  double integral = 0.0;  // int_0^t (1+s^-a) e^{-g s} (1+(t-s)^-b) e^{-d (t-s)} ds
  double bound = 0.0;     // (1 + t^{min(0, 1-a-b)}) e^{-min(g,d) t}, constant-free
};

// Quadrature of the convolution with endpoint singularities removed by the
// substitutions s = tau^{1/(1-alpha)} near 0 and t-s = tau^{1/(1-beta)} near t.
inline ConvolutionCheck convolution_bound(double alpha, double beta,
                                          double gamma, double delta, double t,
                                          double rel_tol = 1e-9) {
  if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("convolution_bound: alpha,beta must be in (0,1)");
  if (gamma == delta)
    throw std::invalid_argument(
        "convolution_bound: gamma == delta is outside the bound's hypotheses");
  if (!(gamma > 0.0 && delta > 0.0))
    throw std::invalid_argument("convolution_bound: gamma,delta must be > 0");
  if (!(t > 0.0)) throw std::invalid_argument("convolution_bound: need t > 0");

  // left half, s in (0, t/2]: s = tau^pl kills s^-alpha exactly
  const double pl = 1.0 / (1.0 - alpha);
  auto left_sub = [&](double tau) {
    const double s = std::pow(tau, pl);
    const double rest =
        (1.0 + std::pow(t - s, -beta)) * std::exp(-gamma * s - delta * (t - s));
    // (1 + s^-alpha) * ds = (pl + pl * tau^(pl-1)) * dtau
    return rest * pl * (1.0 + std::pow(tau, pl - 1.0));
  };
  // right half, s in [t/2, t): sigma = t - s = tau^pr
  const double pr = 1.0 / (1.0 - beta);
  auto right_sub = [&](double tau) {
    const double sig = std::pow(tau, pr);
    const double s = t - sig;
    const double rest =
        (1.0 + std::pow(s, -alpha)) * std::exp(-gamma * s - delta * sig);
    return rest * pr * (1.0 + std::pow(tau, pr - 1.0));
  };

  const QuadResult ql =
      adaptive_quadrature(left_sub, 0.0, std::pow(0.5 * t, 1.0 - alpha), rel_tol);
  const QuadResult qr =
      adaptive_quadrature(right_sub, 0.0, std::pow(0.5 * t, 1.0 - beta), rel_tol);

  ConvolutionCheck out;
  out.integral = ql.value + qr.value;
  const double expo = std::min(0.0, 1.0 - alpha - beta);
  out.bound = (1.0 + std::pow(t, expo)) * std::exp(-std::min(gamma, delta) * t);
  return out;
}

}  // namespace ksns
