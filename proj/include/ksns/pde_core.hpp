#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ksns/csv.hpp"
#include "ksns/operators.hpp"
#include "ksns/sensitivity.hpp"
#include "ksns/snapshot.hpp"
#include "ksns/transforms.hpp"

namespace ksns {

// Coupled IMEX integrator for the chemotaxis-fluid system
//   rho_t + u.grad rho = Lap rho - div(rho S(x,rho,c) grad c) - rho m
//   m_t   + u.grad m   = Lap m - rho m
//   c_t   + u.grad c   = Lap c - c + m
//   u_t   + kappa (u.grad)u = Lap u - grad P + (rho+m) grad phi,  div u = 0
// on a box with no-flux scalars and no-slip velocity.
//
// Splitting per step: (a) upwind advection of the scalars, (b) chemotactic
// drift of rho plus the -rho*m reaction (same product subtracted from both
// densities, so the rho-m difference is conserved to the bit), (c) stiff
// linear part via the exact spectral flows exp(dt*Lap) / exp(dt*(Lap-1)) of
// the grid operators, with the +m source of c integrated exactly for a
// source evolving by pure diffusion, (d) fluid: explicit convection, then
// the Helmholtz-projected buoyancy force, the viscous sine-basis flow, and a
// pressure projection.  Projecting the force before the viscous solve keeps
// constant-(rho+m) forcing exactly in the pressure (gradient fields project
// to zero), which is what makes equilibria stationary to round-off.

enum class FluidModel { NavierStokes, Stokes };

inline const char* fluid_model_name(FluidModel m) {
  return m == FluidModel::NavierStokes ? "navier_stokes" : "stokes";
}

struct Scenario {
  BoxDomain domain{2, {4, 4, 1}, {1, 1, 1}};
  Field rho0, m0, c0, phi;
  VectorField u0;
  SensitivityTensor tensor = SensitivityTensor::zero();
  FluidModel fluid_model = FluidModel::NavierStokes;

  double dt = 0.0;         // > 0: fixed cap for the step; <= 0: CFL + dt_max
  double dt_max = 0.02;    // resolution cap on the exponential integrators
  double t_end = 20.0;
  double epsilon = 0.0;    // deviation-from-equilibrium scale (sweep metadata)
  double output_every = 0.1;
  unsigned long seed = 1;
  // The physical model wants rho0, m0, c0 each nonzero; equilibrium and
  // degenerate calibration scenarios legitimately violate that, so they
  // opt out here.
  bool require_nontrivial = true;
  std::string name = "custom";

  // Mass-selected equilibrium levels (whichever species is in excess).
  double rho_inf() const {
    return std::max(0.0, (mass(rho0) - mass(m0)) / domain.volume());
  }
  double m_inf() const {
    return std::max(0.0, (mass(m0) - mass(rho0)) / domain.volume());
  }

  void validate() const {
    for (const Field* f : {&rho0, &m0, &c0, &phi})
      require_same_domain(f->domain, domain, "Scenario");
    require_same_domain(u0.domain, domain, "Scenario");
    for (const Field* f : {&rho0, &m0, &c0})
      if (!(f->values.minCoeff() >= 0.0))
        throw std::invalid_argument("Scenario: rho0, m0, c0 must be >= 0");
    for (const Field* f : {&rho0, &m0, &c0, &phi})
      if (!f->values.allFinite())
        throw std::invalid_argument("Scenario: non-finite initial data");
    for (int a = 0; a < domain.dim(); ++a)
      if (!u0.comp[a].allFinite())
        throw std::invalid_argument("Scenario: non-finite u0");
    if (require_nontrivial)
      for (const Field* f : {&rho0, &m0, &c0})
        if (f->values.abs().maxCoeff() == 0.0)
          throw std::invalid_argument(
              "Scenario: rho0, m0, c0 must each be nonzero (set "
              "require_nontrivial=false for degenerate scenarios)");
    // no-slip normals
    VectorField chk = u0;
    zero_boundary_faces(chk);
    for (int a = 0; a < domain.dim(); ++a)
      if ((chk.comp[a] != u0.comp[a]).any())
        throw std::invalid_argument("Scenario: u0 must have zero boundary faces");
    if (max_abs_divergence(u0) > 1e-8)
      throw std::invalid_argument("Scenario: u0 must be discretely div-free");
    if (!(t_end >= 0.0) || !(output_every > 0.0) || !(dt_max > 0.0))
      throw std::invalid_argument("Scenario: bad time parameters");
    if (epsilon < 0.0)
      throw std::invalid_argument("Scenario: epsilon must be >= 0");
  }
};

struct State {
  double t = 0.0;
  Field rho, m, c, p;
  VectorField u;
};

// Blow-up signal from the watchdog: carries the last healthy time as the
// finite-horizon proxy.
struct BlowUpSignal : std::runtime_error {
  double t;
  BlowUpSignal(double t_, const std::string& msg)
      : std::runtime_error(msg), t(t_) {}
};

// One diagnostics row.  Column order here defines the CSV layout.
struct DiagRow {
  double t = 0, dt = 0;
  double mass_rho = 0, mass_m = 0, mass_c = 0, mass_diff = 0;
  double min_rho = 0, min_m = 0, min_c = 0;
  double max_rho = 0, max_m = 0, max_c = 0;
  double linf_m = 0;
  double linf_rho_dev = 0, linf_m_dev = 0, linf_c_dev = 0;
  double linf_grad_c = 0, linf_u = 0;
  double l2_u = 0, l2_grad_u = 0;
  double l2_m_sq = 0;
  double grad_m_budget = 0;     // cumulative 2 * int |grad m|_2^2
  double reaction_budget = 0;   // cumulative int sum(rho m) h^d
  double expected_mass_c = 0;   // exact recursion for the c-mass ODE
  double max_div = 0;

  static const std::vector<std::string>& columns() {
    static const std::vector<std::string> cols = {
        "t",            "dt",           "mass_rho",      "mass_m",
        "mass_c",       "mass_diff",    "min_rho",       "min_m",
        "min_c",        "max_rho",      "max_m",         "max_c",
        "linf_m",       "linf_rho_dev", "linf_m_dev",    "linf_c_dev",
        "linf_grad_c",  "linf_u",       "l2_u",          "l2_grad_u",
        "l2_m_sq",      "grad_m_budget", "reaction_budget",
        "expected_mass_c", "max_div"};
    return cols;
  }
  std::vector<double> values() const {
    return {t,           dt,           mass_rho,      mass_m,
            mass_c,      mass_diff,    min_rho,       min_m,
            min_c,       max_rho,      max_m,         max_c,
            linf_m,      linf_rho_dev, linf_m_dev,    linf_c_dev,
            linf_grad_c, linf_u,       l2_u,          l2_grad_u,
            l2_m_sq,     grad_m_budget, reaction_budget,
            expected_mass_c, max_div};
  }
  static DiagRow from_values(const std::vector<double>& v) {
    if (v.size() != columns().size())
      throw std::invalid_argument("DiagRow::from_values: width mismatch");
    DiagRow r;
    size_t i = 0;
    r.t = v[i++]; r.dt = v[i++];
    r.mass_rho = v[i++]; r.mass_m = v[i++]; r.mass_c = v[i++];
    r.mass_diff = v[i++];
    r.min_rho = v[i++]; r.min_m = v[i++]; r.min_c = v[i++];
    r.max_rho = v[i++]; r.max_m = v[i++]; r.max_c = v[i++];
    r.linf_m = v[i++];
    r.linf_rho_dev = v[i++]; r.linf_m_dev = v[i++]; r.linf_c_dev = v[i++];
    r.linf_grad_c = v[i++]; r.linf_u = v[i++];
    r.l2_u = v[i++]; r.l2_grad_u = v[i++];
    r.l2_m_sq = v[i++];
    r.grad_m_budget = v[i++]; r.reaction_budget = v[i++];
    r.expected_mass_c = v[i++]; r.max_div = v[i++];
    return r;
  }
};

namespace detail {

// Chemotactic drift + upwind flux shared by the stepper and the standalone
// operator.  eval() already folds in the wall cutoff; bound checking is a
// full scan when `stride` is 1, a rotating subsample otherwise.
inline VectorField chemotaxis_flux_impl(const Field& rho, const Field& c,
                                        const SensitivityTensor& tensor,
                                        std::vector<Eigen::Matrix3d>& scratch,
                                        long stride, long offset) {
  require_same_domain(rho.domain, c.domain, "chemotaxis_flux");
  const BoxDomain& dom = rho.domain;
  VectorField flux(dom);
  if (tensor.is_zero()) return flux;

  const VectorField g = gradient(c);
  const long ncells = dom.cell_count();
  scratch.resize(ncells);

  // Evaluate S at cell centers, spot-checking the spectral-norm bound.
  {
    long idx = 0;
    for (int i0 = 0; i0 < dom.cells(0); ++i0)
      for (int i1 = 0; i1 < dom.cells(1); ++i1)
        for (int i2 = 0; i2 < dom.cells(2); ++i2, ++idx) {
          const Eigen::Vector3d x(dom.cell_x(0, i0), dom.cell_x(1, i1),
                                  dom.dim() == 3 ? dom.cell_x(2, i2) : 0.0);
          if ((idx + offset) % stride == 0) {
            const double nrm =
                tensor.sample_norm(x, rho.values[idx], c.values[idx], dom.dim());
            if (nrm > tensor.bound() * (1.0 + 1e-7) + 1e-300)
              throw std::invalid_argument(
                  "chemotaxis_flux: sensitivity sample exceeds its bound");
          }
          scratch[idx] = tensor.eval(dom, x, rho.values[idx], c.values[idx]);
        }
  }

  const int n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    const long cell_stride =
        a == 0 ? static_cast<long>(n1) * n2 : (a == 1 ? n2 : 1);
    long fidx = 0;
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) continue;  // no-flux wall
          const long cr = dom.cell_index(i0, i1, i2);
          const long cl = cr - cell_stride;

          // grad c as a full vector at this a-face
          double gc[3] = {0, 0, 0};
          gc[a] = g.comp[a][fidx];
          for (int b = 0; b < dom.dim(); ++b) {
            if (b == a) continue;
            // average the four b-faces of the two adjacent cells
            const int l0 = i0 - (a == 0), l1 = i1 - (a == 1), l2 = i2 - (a == 2);
            const long bL = g.face_index(b, l0, l1, l2);
            const long bR = g.face_index(b, i0, i1, i2);
            const long bs = b == 0
                                ? static_cast<long>(dom.face_extents(b)[1]) *
                                      dom.face_extents(b)[2]
                                : (b == 1 ? dom.face_extents(b)[2] : 1);
            gc[b] = 0.25 * (g.comp[b][bL] + g.comp[b][bL + bs] +
                            g.comp[b][bR] + g.comp[b][bR + bs]);
          }

          const Eigen::Matrix3d S = 0.5 * (scratch[cl] + scratch[cr]);
          double w = 0.0;
          for (int b = 0; b < dom.dim(); ++b) w += S(a, b) * gc[b];

          const double rup = w >= 0.0 ? rho.values[cl] : rho.values[cr];
          flux.comp[a][fidx] = rup * w;
        }
  }
  return flux;
}

}  // namespace detail

// Standalone chemotactic face flux F = rho_upwind * (S grad c), zero normal
// flux on the boundary.  Aborts if a sampled S violates its spectral bound.
inline VectorField chemotaxis_flux(const Field& rho, const Field& c,
                                   const SensitivityTensor& tensor) {
  std::vector<Eigen::Matrix3d> scratch;
  return detail::chemotaxis_flux_impl(rho, c, tensor, scratch, 1, 0);
}

// Helmholtz decomposition against the cell-centred Poisson solve: returns
// the divergence-free part and the potential whose gradient was removed.
inline std::pair<VectorField, Field> leray_project(
    const VectorField& v, const SpectralCell<double>& plan) {
  const Field div = divergence(v);
  Field q = plan.poisson_neumann(div);
  VectorField out = v;
  const VectorField gq = gradient(q);
  for (int a = 0; a < v.domain.dim(); ++a) out.comp[a] -= gq.comp[a];
  return {std::move(out), std::move(q)};
}

// (rho+m) grad(phi) averaged to faces; zero on walls where grad(phi) is.
inline VectorField buoyancy_force(const Field& rho, const Field& m,
                                  const VectorField& grad_phi) {
  const BoxDomain& dom = rho.domain;
  VectorField f(dom);
  const int n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    const long cs = a == 0 ? static_cast<long>(n1) * n2 : (a == 1 ? n2 : 1);
    long fidx = 0;
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) continue;
          const long cr = dom.cell_index(i0, i1, i2);
          const double q = 0.5 * (rho.values[cr - cs] + m.values[cr - cs] +
                                  rho.values[cr] + m.values[cr]);
          f.comp[a][fidx] = q * grad_phi.comp[a][fidx];
        }
  }
  return f;
}

// First-order upwind (u.grad)u at faces; transverse derivatives see no-slip
// mirror ghosts across the walls.
inline VectorField convective(const VectorField& u) {
  const BoxDomain& dom = u.domain;
  VectorField adv(dom);
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    long fidx = 0;
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) continue;
          double acc = 0.0;
          for (int b = 0; b < dom.dim(); ++b) {
            const double hb = dom.spacing(b);
            const long bstride = b == 0 ? static_cast<long>(e[1]) * e[2]
                                        : (b == 1 ? e[2] : 1);
            const int jb = b == 0 ? i0 : (b == 1 ? i1 : i2);
            double vb;  // advecting component b at this a-face
            if (b == a) {
              vb = u.comp[a][fidx];
            } else {
              const int l0 = i0 - (a == 0), l1 = i1 - (a == 1),
                        l2 = i2 - (a == 2);
              const long bL = u.face_index(b, l0, l1, l2);
              const long bR = u.face_index(b, i0, i1, i2);
              const long bs =
                  b == 0 ? static_cast<long>(dom.face_extents(b)[1]) *
                               dom.face_extents(b)[2]
                         : (b == 1 ? dom.face_extents(b)[2] : 1);
              vb = 0.25 * (u.comp[b][bL] + u.comp[b][bL + bs] +
                           u.comp[b][bR] + u.comp[b][bR + bs]);
            }
            double du;
            const double here = u.comp[a][fidx];
            if (vb >= 0.0) {
              const double prev = jb == 0 ? -here : u.comp[a][fidx - bstride];
              du = (here - prev) / hb;
            } else {
              const double next =
                  jb == e[b] - 1 ? -here : u.comp[a][fidx + bstride];
              du = (next - here) / hb;
            }
            acc += vb * du;
          }
          adv.comp[a][fidx] = acc;
        }
  }
  return adv;
}

// Stream-function swirl with unit sup-norm: the standard single-vortex test
// velocity, tangential at the walls, zero normal faces, not yet projected.
inline VectorField swirl_velocity(const BoxDomain& dom) {
  VectorField u(dom);
  const double L0 = dom.length(0), L1 = dom.length(1), L2 = dom.length(2);
  auto zfac = [&](double z) {
    if (dom.dim() < 3) return 1.0;
    const double s = std::sin(M_PI * z / L2);
    return s * s;
  };
  sample_faces(u, 0, [&](double x, double y, double z) {
    const double sx = std::sin(M_PI * x / L0);
    return sx * sx * std::sin(2.0 * M_PI * y / L1) * zfac(z) / L1;
  });
  sample_faces(u, 1, [&](double x, double y, double z) {
    const double sy = std::sin(M_PI * y / L1);
    return -std::sin(2.0 * M_PI * x / L0) * sy * sy * zfac(z) / L0;
  });
  // u2 stays zero in 3D
  zero_boundary_faces(u);
  const double sup = face_linf(u);
  if (sup > 0.0)
    for (int a = 0; a < dom.dim(); ++a) u.comp[a] /= sup;
  return u;
}

class Stepper {
public:
  explicit Stepper(const Scenario& sc)
      : sc_(sc), cells_(sc.domain) {
    sc_.validate();
    for (int a = 0; a < sc.domain.dim(); ++a)
      faces_.emplace_back(sc.domain, a);
    grad_phi_ = gradient(sc_.phi);
    phi_active_ = face_linf(grad_phi_) > 0.0;
    mode0_to_mass_ = std::sqrt(static_cast<double>(sc.domain.cell_count())) *
                     sc.domain.cell_volume();
    // watchdog reference scales
    scale_[0] = std::max(1.0, sc_.rho0.values.abs().maxCoeff());
    scale_[1] = std::max(1.0, sc_.m0.values.abs().maxCoeff());
    scale_[2] = std::max(1.0, sc_.c0.values.abs().maxCoeff());
    scale_[3] = std::max(1.0, face_linf(sc_.u0));
    expected_mass_c_ = mass(sc_.c0);
  }

  const Scenario& scenario() const { return sc_; }
  const SpectralCell<double>& cell_plan() const { return cells_; }

  State initial_state() const {
    State s;
    s.t = 0.0;
    s.rho = sc_.rho0;
    s.m = sc_.m0;
    s.c = sc_.c0;
    s.p = Field(sc_.domain);
    s.u = sc_.u0;
    return s;
  }

  // Step-size control: the advective CFL with the chemotactic drift folded
  // in, the reaction bound keeping 1 - dt*(rho+m) positive, and a positivity
  // guard accounting for the d-way splitting of the upwind update.
  double cfl_dt(const State& s) const {
    const double h = sc_.domain.min_spacing();
    const int d = sc_.domain.dim();
    const double umax = face_linf(s.u);
    const double gcmax =
        sc_.tensor.is_zero() ? 0.0 : face_linf(gradient(s.c));
    const double drift = umax + sc_.tensor.bound() * gcmax;
    const double rmax = s.rho.values.maxCoeff();
    const double mmax = s.m.values.maxCoeff();
    double dt = 0.4 * std::min(h / (drift + 1e-300),
                               1.0 / (std::max(rmax, 0.0) + std::max(mmax, 0.0) + 1.0));
    // first-order upwind positivity: dt * d * (per-substep drift)/h < 0.9,
    // with sqrt(d) headroom for the rotated tensor drift
    const double worst =
        umax + sc_.tensor.bound() * gcmax * std::sqrt(static_cast<double>(d));
    dt = std::min(dt, 0.9 * h / (d * worst + 1e-300));
    return dt;
  }

  std::pair<VectorField, Field> project(const VectorField& v) const {
    require_same_domain(v.domain, sc_.domain, "project");
    return leray_project(v, cells_);
  }

  VectorField chemotaxis_flux(const Field& rho, const Field& c) {
    // full bound scan on the first call, rotating subsample afterwards
    const long stride = flux_calls_ == 0 ? 1 : 37;
    const long offset = flux_calls_ % 37;
    ++flux_calls_;
    return detail::chemotaxis_flux_impl(rho, c, sc_.tensor, scratch_, stride,
                                        offset);
  }

  void advance(State& s, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance: need dt > 0");
    const BoxDomain& dom = sc_.domain;
    const double vol = dom.cell_volume();

    // (a) upwind advection of the scalars by u
    if (face_linf(s.u) > 0.0) {
      s.rho.values -= dt * divergence(upwind_flux(s.u, s.rho)).values;
      s.m.values -= dt * divergence(upwind_flux(s.u, s.m)).values;
      s.c.values -= dt * divergence(upwind_flux(s.u, s.c)).values;
    }

    // (b) chemotactic drift of rho, then the shared reaction product
    if (!sc_.tensor.is_zero())
      s.rho.values -= dt * divergence(chemotaxis_flux(s.rho, s.c)).values;
    {
      const Eigen::ArrayXd R = s.rho.values * s.m.values;
      s.rho.values -= dt * R;
      s.m.values -= dt * R;
      reaction_budget_ += dt * R.sum() * vol;
    }

    // (c) exact spectral flows of the stiff linear parts
    {
      const Eigen::ArrayXd heat = cells_.heat_multiplier(dt);
      Eigen::ArrayXd rh = cells_.to_modes(s.rho);
      Eigen::ArrayXd mh = cells_.to_modes(s.m);
      Eigen::ArrayXd ch = cells_.to_modes(s.c);
      const double edt = std::exp(-dt);
      // c_t = (Lap - 1) c + m: exact when m evolves by pure diffusion
      ch = edt * heat * ch + (std::exp(dt) - 1.0) * edt * heat * mh;
      expected_mass_c_ =
          edt * expected_mass_c_ + (1.0 - edt) * mh[0] * mode0_to_mass_;
      rh *= heat;
      mh *= heat;
      s.rho = cells_.from_modes(rh);
      s.m = cells_.from_modes(mh);
      s.c = cells_.from_modes(ch);
    }
    {
      const VectorField gm = gradient(s.m);
      grad_m_budget_ += dt * 2.0 * face_inner(gm, gm);
    }

    // (d) fluid advance
    {
      VectorField force(dom);
      bool have_force = false;
      if (phi_active_) {
        force = buoyancy_force(s.rho, s.m, grad_phi_);
        have_force = true;
      }
      const bool have_u = face_linf(s.u) > 0.0;
      if (sc_.fluid_model == FluidModel::NavierStokes && have_u) {
        const VectorField adv = convective(s.u);
        for (int a = 0; a < dom.dim(); ++a) force.comp[a] -= adv.comp[a];
        have_force = true;
      }
      if (have_force || have_u) {
        Field q_force(dom);
        VectorField fp(dom);
        if (have_force) {
          auto pr = project(force);
          fp = std::move(pr.first);
          q_force = std::move(pr.second);
        }
        VectorField ustar(dom);
        for (int a = 0; a < dom.dim(); ++a)
          ustar.comp[a] = faces_[a].flow(s.u.comp[a] + dt * fp.comp[a], dt);
        auto pr = project(ustar);
        s.u = std::move(pr.first);
        s.p = Field(dom);
        s.p.values = pr.second.values / dt + q_force.values;
      }
    }

    s.t += dt;
    watchdog(s);
  }

  // Norm explosion / loss of positivity / non-finite values: raise the
  // blow-up signal with the last healthy time.
  void watchdog(const State& s, double factor = 1e6) const {
    auto fail = [&](const char* what) { throw BlowUpSignal(s.t, what); };
    if (!s.rho.values.allFinite() || !s.m.values.allFinite() ||
        !s.c.values.allFinite())
      fail("watchdog: non-finite scalar field");
    for (int a = 0; a < sc_.domain.dim(); ++a)
      if (!s.u.comp[a].allFinite()) fail("watchdog: non-finite velocity");
    const double nr = s.rho.values.abs().maxCoeff();
    const double nm = s.m.values.abs().maxCoeff();
    const double nc = s.c.values.abs().maxCoeff();
    const double nu = face_linf(s.u);
    if (nr > factor * scale_[0] || nm > factor * scale_[1] ||
        nc > factor * scale_[2] || nu > factor * scale_[3])
      fail("watchdog: norm exceeded its blow-up threshold");
    const double negtol = -1e-10;
    if (s.rho.values.minCoeff() < negtol * std::max(1.0, nr) ||
        s.m.values.minCoeff() < negtol * std::max(1.0, nm) ||
        s.c.values.minCoeff() < negtol * std::max(1.0, nc))
      fail("watchdog: positivity lost");
  }

  double reaction_budget() const { return reaction_budget_; }
  double grad_m_budget() const { return grad_m_budget_; }
  double expected_mass_c() const { return expected_mass_c_; }

  DiagRow diagnostics_row(const State& s, double dt, double rho_inf,
                          double m_inf) const {
    DiagRow r;
    r.t = s.t;
    r.dt = dt;
    r.mass_rho = mass(s.rho);
    r.mass_m = mass(s.m);
    r.mass_c = mass(s.c);
    r.mass_diff = r.mass_rho - r.mass_m;
    r.min_rho = s.rho.values.minCoeff();
    r.min_m = s.m.values.minCoeff();
    r.min_c = s.c.values.minCoeff();
    r.max_rho = s.rho.values.maxCoeff();
    r.max_m = s.m.values.maxCoeff();
    r.max_c = s.c.values.maxCoeff();
    r.linf_m = s.m.values.abs().maxCoeff();
    r.linf_rho_dev = (s.rho.values - rho_inf).abs().maxCoeff();
    r.linf_m_dev = (s.m.values - m_inf).abs().maxCoeff();
    r.linf_c_dev = (s.c.values - m_inf).abs().maxCoeff();
    r.linf_grad_c = lp_norm(gradient(s.c), INFINITY);
    r.linf_u = lp_norm(s.u, INFINITY);
    r.l2_u = lp_norm(s.u, 2.0);
    r.l2_grad_u = grad_lq_norm(s.u, 2.0);
    r.l2_m_sq = l2_norm_sq(s.m);
    r.grad_m_budget = grad_m_budget_;
    r.reaction_budget = reaction_budget_;
    r.expected_mass_c = expected_mass_c_;
    r.max_div = max_abs_divergence(s.u);
    return r;
  }

private:
  Scenario sc_;
  SpectralCell<double> cells_;
  std::vector<SpectralFace<double>> faces_;
  VectorField grad_phi_;
  bool phi_active_ = false;
  double mode0_to_mass_ = 0.0;
  double scale_[4] = {1, 1, 1, 1};
  long flux_calls_ = 0;
  std::vector<Eigen::Matrix3d> scratch_;
  double reaction_budget_ = 0.0;
  double grad_m_budget_ = 0.0;
  double expected_mass_c_ = 0.0;
};

// Single-step convenience wrapper around Stepper.
inline State step(const State& s, const Scenario& sc) {
  Stepper st(sc);
  State out = s;
  const double dt =
      sc.dt > 0.0 ? sc.dt : std::min(st.cfl_dt(out), sc.dt_max);
  st.advance(out, dt);
  return out;
}

struct RunOptions {
  double watchdog_factor = 1e6;
  bool keep_states = false;          // retain a State copy per output time
  std::vector<double> sample_times;  // extra exact stopping times
  std::string out_dir;               // write diagnostics.csv (+snapshots) here
  double snapshot_every = 0.0;       // 0: final snapshot only (with out_dir)
  long max_steps = 20000000;
};

struct RunResult {
  std::vector<DiagRow> rows;
  std::vector<State> states;  // at output times, if requested
  State final_state;
  bool blew_up = false;
  double t_reached = 0.0;
  long steps = 0;
  double rho_inf = 0.0, m_inf = 0.0;
};

inline void write_state_snapshots(const std::string& dir, const State& s,
                                  int index) {
  namespace fs = std::filesystem;
  char tag[16];
  std::snprintf(tag, sizeof(tag), "%05d", index);
  const std::string base = (fs::path(dir) / ("snap_" + std::string(tag))).string();
  write_snapshot(base + "_rho.bin", s.rho, s.t, field_id::rho);
  write_snapshot(base + "_m.bin", s.m, s.t, field_id::m);
  write_snapshot(base + "_c.bin", s.c, s.t, field_id::c);
  write_snapshot(base + "_p.bin", s.p, s.t, field_id::p);
  for (int a = 0; a < s.u.domain.dim(); ++a)
    write_snapshot_component(base + "_u" + std::to_string(a) + ".bin", s.u, a,
                             s.t, field_id::u0 + a);
}

// Integrate the scenario from 0 to t_end, emitting one diagnostics row per
// output time.  Watchdog blow-up is caught and reported in the summary, so
// stress scenarios produce a finite-horizon record instead of an exception.
inline RunResult run(const Scenario& sc, const RunOptions& opt = {}) {
  Stepper st(sc);
  RunResult res;
  res.rho_inf = sc.rho_inf();
  res.m_inf = sc.m_inf();

  std::unique_ptr<CsvWriter> csv;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    csv = std::make_unique<CsvWriter>(
        (std::filesystem::path(opt.out_dir) / "diagnostics.csv").string(),
        DiagRow::columns());
  }

  // merged, sorted list of forced stop times (exact multiples of the output
  // cadence, any requested sample times, and t_end itself)
  const double teps = 1e-9 * std::max(1.0, sc.t_end);
  std::vector<double> stops = opt.sample_times;
  for (long k = 1; k * sc.output_every < sc.t_end + teps; ++k)
    stops.push_back(std::min(k * sc.output_every, sc.t_end));
  stops.push_back(sc.t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end(),
                          [&](double a, double b) {
                            return std::abs(a - b) <= teps;
                          }),
              stops.end());
  while (!stops.empty() && stops.front() <= 0.0) stops.erase(stops.begin());

  State s = st.initial_state();
  auto emit = [&](double dt_used) {
    DiagRow row = st.diagnostics_row(s, dt_used, res.rho_inf, res.m_inf);
    res.rows.push_back(row);
    if (csv) csv->write_row(row.values());
    if (opt.keep_states) res.states.push_back(s);
  };
  emit(0.0);
  int snap_index = 0;
  if (!opt.out_dir.empty() && opt.snapshot_every > 0.0)
    write_state_snapshots(opt.out_dir, s, snap_index++);

  double next_snap = opt.snapshot_every;
  try {
    size_t stop_i = 0;
    while (stop_i < stops.size()) {
      if (res.steps >= opt.max_steps)
        throw BlowUpSignal(s.t, "run: step budget exhausted");
      // sc.dt > 0 asks for that exact step; otherwise CFL capped by dt_max
      double dt =
          sc.dt > 0.0 ? sc.dt : std::min(st.cfl_dt(s), sc.dt_max);
      const double target = stops[stop_i];
      if (s.t + dt >= target - teps) dt = target - s.t;
      st.advance(s, dt);
      st.watchdog(s, opt.watchdog_factor);
      ++res.steps;
      if (std::abs(s.t - target) <= teps) {
        s.t = target;  // kill accumulation drift at forced stops
        emit(dt);
        if (!opt.out_dir.empty() && opt.snapshot_every > 0.0 &&
            target >= next_snap - teps) {
          write_state_snapshots(opt.out_dir, s, snap_index++);
          next_snap += opt.snapshot_every;
        }
        ++stop_i;
      }
    }
  } catch (const BlowUpSignal& sig) {
    res.blew_up = true;
    res.t_reached = sig.t;
  }
  if (!res.blew_up) res.t_reached = s.t;
  res.final_state = std::move(s);
  if (!opt.out_dir.empty()) write_state_snapshots(opt.out_dir, res.final_state, 99999);
  return res;
}

}  // namespace ksns
