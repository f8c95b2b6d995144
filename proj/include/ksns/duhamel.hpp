#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksns/pde_core.hpp"

namespace ksns {

// Mild-solution fixed point on a finite time lattice.  The unknowns are
// (rho - m, m, c, u): the reaction cancels in the difference, so its
// equation is transport + chemotaxis only.  Each Picard sweep evaluates the
// nonlinearities with the same spatial operators as the time stepper and
// convolves them against the exact mode-wise kernels, integrating the
// piecewise-linear-in-time interpolant of each integrand in closed form.
// Agreement with the stepper therefore isolates time-splitting error: every
// spatial stencil is shared.
//
// Scalar kernels are exact semigroups, so their Duhamel integrals are taken
// in one shot from 0 to each node.  The velocity kernel is the surrogate
// "componentwise diffusion flow, then projection", which is not an exact
// semigroup; its integral is assembled segment by segment through the
// subinterval variation-of-constants identity, keeping the projection
// cadence comparable to the stepper's.

struct MildIterate {
  BoxDomain domain{2, {4, 4, 1}, {1, 1, 1}};
  std::vector<double> nodes;  // nodes[0] == 0
  std::vector<Field> diff, m, c;  // diff = rho - m
  std::vector<VectorField> u;
  int iteration = 0;

  Field rho_at(size_t j) const {
    Field r = diff[j];
    r.values += m[j].values;
    return r;
  }
};

// Geometric node ladder 0, t1, ..., T with t1 = 1e-3 T: the kernel
// integration is exact per segment, so resolution is only needed where the
// integrand still moves, i.e. near t = 0.
inline std::vector<double> mild_nodes(double t_end, int count = 64) {
  if (!(t_end > 0.0)) throw std::invalid_argument("mild_nodes: need t_end > 0");
  if (count < 3) throw std::invalid_argument("mild_nodes: need >= 3 nodes");
  std::vector<double> ts(count);
  ts[0] = 0.0;
  const double t1 = 1e-3 * t_end;
  const double r = std::pow(t_end / t1, 1.0 / (count - 2));
  for (int j = 1; j < count; ++j) ts[j] = t1 * std::pow(r, j - 1);
  ts[count - 1] = t_end;
  return ts;
}

namespace detail {

// exp(-z) moments of the linear hat functions over one segment, z = K*dt:
//   phi_a(z) = (z - 1 + e^-z)/z^2      weight of the newer (right) node
//   phi_b(z) = (1 - e^-z (1 + z))/z^2  weight of the older (left) node
// Series branch keeps them accurate through z -> 0 (phi_a + phi_b -> 1).
inline void hat_moments(double z, double& pa, double& pb) {
  if (z < 1e-2) {
    pa = 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
    pb = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
  } else {
    const double e = std::exp(-z);
    pa = (z - 1.0 + e) / (z * z);
    pb = (1.0 - e * (1.0 + z)) / (z * z);
  }
}

struct KernelTables {
  // per segment: decay across the segment and the two hat moments, all
  // mode-wise for eigenvalues lam (+shift)
  std::vector<Eigen::ArrayXd> decay, phi_a, phi_b;
};

inline KernelTables kernel_tables(const Eigen::ArrayXd& lam, double shift,
                                  const std::vector<double>& nodes) {
  KernelTables kt;
  const int nseg = static_cast<int>(nodes.size()) - 1;
  kt.decay.resize(nseg);
  kt.phi_a.resize(nseg);
  kt.phi_b.resize(nseg);
  for (int j = 0; j < nseg; ++j) {
    const double dt = nodes[j + 1] - nodes[j];
    const Eigen::ArrayXd z = dt * (lam + shift);
    kt.decay[j] = (-z).exp();
    kt.phi_a[j].resize(lam.size());
    kt.phi_b[j].resize(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k)
      hat_moments(z[k], kt.phi_a[j][k], kt.phi_b[j][k]);
  }
  return kt;
}

// acc = sum_j Delta_j E (N_j phi_b + N_{j+1} phi_a) over segments j < target,
// marching the kernel decay backwards so no exponential is re-evaluated.
inline Eigen::ArrayXd convolve_to_target(const KernelTables& kt,
                                         const std::vector<double>& nodes,
                                         const std::vector<Eigen::ArrayXd>& nhat,
                                         int target) {
  const Eigen::Index nmode = nhat[0].size();
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(nmode);
  Eigen::ArrayXd reach = Eigen::ArrayXd::Ones(nmode);
  for (int j = target - 1; j >= 0; --j) {
    const double dt = nodes[j + 1] - nodes[j];
    acc += reach * dt * (nhat[j] * kt.phi_b[j] + nhat[j + 1] * kt.phi_a[j]);
    reach *= kt.decay[j];
  }
  return acc;
}

}  // namespace detail

struct PicardResult {
  MildIterate iterate;
  std::vector<double> dists;  // sup distance between successive iterates
  bool converged = false;
};

// sup over nodes and fields of the pointwise gap between two iterates
inline double iterate_distance(const MildIterate& a, const MildIterate& b) {
  if (a.nodes.size() != b.nodes.size())
    throw std::invalid_argument("iterate_distance: node ladders differ");
  double d = 0.0;
  for (size_t j = 0; j < a.nodes.size(); ++j) {
    d = std::max(d, (a.diff[j].values - b.diff[j].values).abs().maxCoeff());
    d = std::max(d, (a.m[j].values - b.m[j].values).abs().maxCoeff());
    d = std::max(d, (a.c[j].values - b.c[j].values).abs().maxCoeff());
    for (int ax = 0; ax < a.domain.dim(); ++ax)
      d = std::max(d, (a.u[j].comp[ax] - b.u[j].comp[ax]).abs().maxCoeff());
  }
  return d;
}

class MildSolver {
public:
  MildSolver(const Scenario& sc, std::vector<double> nodes)
      : sc_(sc), nodes_(std::move(nodes)), cells_(sc.domain) {
    sc_.validate();
    if (nodes_.size() < 2 || nodes_[0] != 0.0)
      throw std::invalid_argument("MildSolver: node ladder must start at 0");
    for (size_t j = 1; j < nodes_.size(); ++j)
      if (!(nodes_[j] > nodes_[j - 1]))
        throw std::invalid_argument("MildSolver: nodes must increase");
    for (int a = 0; a < sc_.domain.dim(); ++a)
      faces_.emplace_back(sc_.domain, a);
    grad_phi_ = gradient(sc_.phi);
    phi_active_ = face_linf(grad_phi_) > 0.0;

    heat_tables_ = detail::kernel_tables(cells_.eigenvalues(), 0.0, nodes_);
    damp_tables_ = detail::kernel_tables(cells_.eigenvalues(), 1.0, nodes_);
    for (int a = 0; a < sc_.domain.dim(); ++a)
      face_tables_.push_back(
          detail::kernel_tables(faces_[a].eigenvalues(), 0.0, nodes_));
  }

  const std::vector<double>& nodes() const { return nodes_; }

  // Free evolution of the initial data: the zeroth Picard iterate.
  MildIterate initial_iterate() const {
    MildIterate it;
    it.domain = sc_.domain;
    it.nodes = nodes_;
    const size_t n = nodes_.size();
    Field diff0(sc_.domain);
    diff0.values = sc_.rho0.values - sc_.m0.values;
    const Eigen::ArrayXd wh = cells_.to_modes(diff0);
    const Eigen::ArrayXd mh = cells_.to_modes(sc_.m0);
    const Eigen::ArrayXd ch = cells_.to_modes(sc_.c0);
    it.diff.reserve(n);
    it.m.reserve(n);
    it.c.reserve(n);
    it.u.reserve(n);
    it.diff.push_back(diff0);
    it.m.push_back(sc_.m0);
    it.c.push_back(sc_.c0);
    it.u.push_back(sc_.u0);
    VectorField ucur = sc_.u0;
    for (size_t j = 1; j < n; ++j) {
      const double t = nodes_[j];
      const Eigen::ArrayXd heat = cells_.heat_multiplier(t);
      it.diff.push_back(cells_.from_modes(Eigen::ArrayXd(heat * wh)));
      it.m.push_back(cells_.from_modes(Eigen::ArrayXd(heat * mh)));
      it.c.push_back(
          cells_.from_modes(Eigen::ArrayXd(std::exp(-t) * heat * ch)));
      // free surrogate flow, projected at the node cadence
      const double dt = nodes_[j] - nodes_[j - 1];
      VectorField v(sc_.domain);
      for (int a = 0; a < sc_.domain.dim(); ++a)
        v.comp[a] = faces_[a].flow(ucur.comp[a], dt);
      ucur = leray_project(v, cells_).first;
      it.u.push_back(ucur);
    }
    return it;
  }

  // One application of the Picard map.
  MildIterate picard_step(const MildIterate& cur) const {
    const size_t n = nodes_.size();
    if (cur.nodes != nodes_)
      throw std::invalid_argument("picard_step: iterate has foreign nodes");

    // nonlinearities at every node, in mode space
    std::vector<Eigen::ArrayXd> nw(n), nm(n), nc(n);
    std::vector<std::vector<Eigen::ArrayXd>> nu(
        sc_.domain.dim(), std::vector<Eigen::ArrayXd>(n));
    const double kappa =
        sc_.fluid_model == FluidModel::NavierStokes ? 1.0 : 0.0;
    for (size_t j = 0; j < n; ++j) {
      const Field& w = cur.diff[j];
      const Field& m = cur.m[j];
      const Field& c = cur.c[j];
      const VectorField& u = cur.u[j];
      const Field rho = cur.rho_at(j);
      const bool have_u = face_linf(u) > 0.0;

      Field fw(sc_.domain), fm(sc_.domain), fc(sc_.domain);
      fw.values.setZero();
      fm.values = -(rho.values * m.values);
      fc.values = m.values;
      if (!sc_.tensor.is_zero())
        fw.values -= divergence(chemotaxis_flux(rho, c, sc_.tensor)).values;
      if (have_u) {
        fw.values -= divergence(upwind_flux(u, w)).values;
        fm.values -= divergence(upwind_flux(u, m)).values;
        fc.values -= divergence(upwind_flux(u, c)).values;
      }
      if (!fw.values.allFinite() || !fm.values.allFinite() ||
          !fc.values.allFinite())
        throw std::runtime_error(
            "picard_step: non-finite integrand at node " + std::to_string(j));
      nw[j] = cells_.to_modes(fw);
      nm[j] = cells_.to_modes(fm);
      nc[j] = cells_.to_modes(fc);

      VectorField force(sc_.domain);
      bool have_force = false;
      if (phi_active_) {
        force = buoyancy_force(rho, m, grad_phi_);
        have_force = true;
      }
      if (kappa > 0.0 && have_u) {
        const VectorField adv = convective(u);
        for (int a = 0; a < sc_.domain.dim(); ++a)
          force.comp[a] -= kappa * adv.comp[a];
        have_force = true;
      }
      if (have_force) force = leray_project(force, cells_).first;
      for (int a = 0; a < sc_.domain.dim(); ++a) {
        if (!force.comp[a].allFinite())
          throw std::runtime_error(
              "picard_step: non-finite force at node " + std::to_string(j));
        nu[a][j] = faces_[a].to_modes(force.comp[a]);
      }
    }

    MildIterate next;
    next.domain = sc_.domain;
    next.nodes = nodes_;
    next.iteration = cur.iteration + 1;
    next.diff.resize(n, Field(sc_.domain));
    next.m.resize(n, Field(sc_.domain));
    next.c.resize(n, Field(sc_.domain));
    next.u.resize(n, VectorField(sc_.domain));
    next.diff[0] = cur.diff[0];
    next.m[0] = sc_.m0;
    next.c[0] = sc_.c0;
    next.u[0] = sc_.u0;

    Field diff0(sc_.domain);
    diff0.values = sc_.rho0.values - sc_.m0.values;
    const Eigen::ArrayXd wh0 = cells_.to_modes(diff0);
    const Eigen::ArrayXd mh0 = cells_.to_modes(sc_.m0);
    const Eigen::ArrayXd ch0 = cells_.to_modes(sc_.c0);

    for (size_t i = 1; i < n; ++i) {
      const double t = nodes_[i];
      const int ti = static_cast<int>(i);
      const Eigen::ArrayXd heat = cells_.heat_multiplier(t);
      Eigen::ArrayXd acc =
          heat * wh0 + detail::convolve_to_target(heat_tables_, nodes_, nw, ti);
      next.diff[i] = cells_.from_modes(acc);
      acc = heat * mh0 + detail::convolve_to_target(heat_tables_, nodes_, nm, ti);
      next.m[i] = cells_.from_modes(acc);
      acc = std::exp(-t) * heat * ch0 +
            detail::convolve_to_target(damp_tables_, nodes_, nc, ti);
      next.c[i] = cells_.from_modes(acc);
    }

    // u marches node to node: flow the previous value across the segment,
    // add the segment's kernel-weighted force, project.
    for (size_t i = 1; i < n; ++i) {
      const int j = static_cast<int>(i) - 1;
      const double dseg = nodes_[i] - nodes_[j];
      VectorField v(sc_.domain);
      for (int a = 0; a < sc_.domain.dim(); ++a) {
        Eigen::ArrayXd um = faces_[a].to_modes(next.u[j].comp[a]);
        um *= face_tables_[a].decay[j];
        um += dseg * (nu[a][j] * face_tables_[a].phi_b[j] +
                      nu[a][j + 1] * face_tables_[a].phi_a[j]);
        v.comp[a] = faces_[a].from_modes(um);
      }
      next.u[i] = leray_project(v, cells_).first;
    }
    return next;
  }

  PicardResult solve(int max_iter = 14, double tol = 1e-10) const {
    PicardResult res;
    MildIterate cur = initial_iterate();
    for (int k = 0; k < max_iter; ++k) {
      MildIterate nxt = picard_step(cur);
      const double d = iterate_distance(nxt, cur);
      res.dists.push_back(d);
      cur = std::move(nxt);
      if (d <= tol) {
        res.converged = true;
        break;
      }
    }
    res.iterate = std::move(cur);
    return res;
  }

private:
  Scenario sc_;
  std::vector<double> nodes_;
  SpectralCell<double> cells_;
  std::vector<SpectralFace<double>> faces_;
  VectorField grad_phi_;
  bool phi_active_ = false;
  detail::KernelTables heat_tables_, damp_tables_;
  std::vector<detail::KernelTables> face_tables_;
};

inline PicardResult picard_solve(const Scenario& sc, double t_end,
                                 int node_count = 64, int max_iter = 14,
                                 double tol = 1e-10) {
  MildSolver solver(sc, mild_nodes(t_end, node_count));
  return solver.solve(max_iter, tol);
}

// Decay-weighted sup norms over a trajectory: sup_t e^{a t} ||f(t)|| /
// (1 + t^-sigma), the quantities the small-data argument keeps bounded.
// The sigma exponents are those of the three-dimensional smoothing
// estimates behind the contraction.
struct WeightedNormParams {
  double alpha1 = 0.0, alpha2 = 0.0;
  double p0 = 2.0, q0 = 5.0;
};

struct WeightedNormTrack {
  double diff = 0.0;    // rho-m deviation, L^q0, rate alpha1
  double grad_c = 0.0;  // grad c, L^q0, rate alpha1
  double vel = 0.0;     // u, L^q0, rate alpha2
  double grad_u = 0.0;  // grad u, L^q0, rate alpha2

  static double weight(double t, double sigma, double alpha) {
    if (t <= 0.0) return 0.0;  // the t->0 limit of e^{at}/(1+t^-sigma)
    return std::exp(alpha * t) / (1.0 + std::pow(t, -sigma));
  }

  void absorb(const WeightedNormParams& wp, double t, const State& s,
              double rho_inf, double m_inf) {
    const double s_diff = 1.5 * (1.0 / wp.p0 - 1.0 / wp.q0);
    const double s_gc = 0.5;
    const double s_u = 0.5 - 1.5 / wp.q0;
    const double s_gu = 0.5;
    Field dev(s.rho.domain);
    dev.values = (s.rho.values - s.m.values) - (rho_inf - m_inf);
    diff = std::max(diff, weight(t, s_diff, wp.alpha1) * lp_norm(dev, wp.q0));
    grad_c = std::max(
        grad_c, weight(t, s_gc, wp.alpha1) * lp_norm(gradient(s.c), wp.q0));
    vel = std::max(vel, weight(t, s_u, wp.alpha2) * lp_norm(s.u, wp.q0));
    grad_u = std::max(
        grad_u, weight(t, s_gu, wp.alpha2) * grad_lq_norm(s.u, wp.q0));
  }
};

// Same solution computed two independent ways: the splitting stepper at dt
// and dt/2, and the Picard fixed point.  The dt pair yields a Richardson
// estimate of the stepper's time error; the fixed point must then sit on
// the fine solution to within a few multiples of that estimate (with an
// absolute floor for fields that are exact in both representations).
struct FieldAgreement {
  std::string field;
  double richardson = 0.0;    // |stepper(dt) - stepper(dt/2)|_sup
  double disagreement = 0.0;  // |stepper(dt/2) - picard|_sup
  double tolerance = 0.0;
  bool passed = false;
};

struct CrossValidation {
  std::vector<FieldAgreement> fields;
  std::vector<double> picard_dists;
  bool picard_converged = false;
  bool outside_contraction = false;
  bool passed = false;
  double dt_coarse = 0.0;
  double t_end = 0.0;
};

inline CrossValidation cross_validate(const Scenario& sc, double t_end,
                                      int node_count = 64, int max_iter = 14,
                                      double floor = 1e-8) {
  CrossValidation cv;
  cv.t_end = t_end;

  Scenario base = sc;
  base.t_end = t_end;
  base.output_every = t_end;

  // coarse dt: an exact divider of t_end near the stability limit
  Stepper probe(base);
  const double dt0 = std::min(probe.cfl_dt(probe.initial_state()), base.dt_max);
  const long nsteps = static_cast<long>(std::ceil(t_end / dt0));
  cv.dt_coarse = t_end / static_cast<double>(nsteps);

  Scenario coarse = base;
  coarse.dt = cv.dt_coarse;
  Scenario fine = base;
  fine.dt = cv.dt_coarse / 2.0;
  const RunResult rc = run(coarse);
  const RunResult rf = run(fine);
  if (rc.blew_up || rf.blew_up)
    throw std::runtime_error("cross_validate: stepper run blew up");

  PicardResult pr = picard_solve(base, t_end, node_count, max_iter);
  cv.picard_dists = pr.dists;
  cv.picard_converged = pr.converged;
  cv.outside_contraction =
      pr.dists.size() >= 2 && pr.dists.back() > pr.dists.front();

  const size_t last = pr.iterate.nodes.size() - 1;
  auto compare = [&](const std::string& name, const Eigen::ArrayXd& a,
                     const Eigen::ArrayXd& b, const Eigen::ArrayXd& p) {
    FieldAgreement fa;
    fa.field = name;
    fa.richardson = (a - b).abs().maxCoeff();
    fa.disagreement = (b - p).abs().maxCoeff();
    fa.tolerance = std::max(4.0 * fa.richardson, floor);
    fa.passed = fa.disagreement <= fa.tolerance;
    cv.fields.push_back(fa);
  };
  compare("rho_minus_m",
          rc.final_state.rho.values - rc.final_state.m.values,
          rf.final_state.rho.values - rf.final_state.m.values,
          pr.iterate.diff[last].values);
  compare("m", rc.final_state.m.values, rf.final_state.m.values,
          pr.iterate.m[last].values);
  compare("c", rc.final_state.c.values, rf.final_state.c.values,
          pr.iterate.c[last].values);
  for (int a = 0; a < sc.domain.dim(); ++a)
    compare("u" + std::to_string(a), rc.final_state.u.comp[a],
            rf.final_state.u.comp[a], pr.iterate.u[last].comp[a]);

  cv.passed = cv.picard_converged;
  for (const auto& f : cv.fields) cv.passed = cv.passed && f.passed;
  return cv;
}

}  // namespace ksns
