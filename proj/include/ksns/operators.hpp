#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ksns/field.hpp"

namespace ksns {

// Discrete calculus on the MAC grid.  Conventions:
//  * scalar fields close with a mirror ghost layer: ghost = interior for
//    homogeneous Neumann, ghost = -interior for homogeneous Dirichlet;
//  * vector fields are face-staggered with boundary normal faces pinned to 0;
//  * all inner products and norms carry the cell volume h^d, for faces too,
//    so summation by parts <grad f, v> = -<f, div v> holds exactly whenever
//    v has zero boundary normals.

template <class Scalar>
Scalar bc_ghost(Scalar interior, Bc bc) {
  return bc == Bc::NeumannHomogeneous ? interior : -interior;
}

// Face-staggered gradient.  Interior faces take the centered difference of
// the adjacent cells; boundary faces get the one-sided value implied by f.bc
// (0 for Neumann, 2 f/h for Dirichlet).
template <class Scalar>
VectorFieldT<Scalar> gradient(const FieldT<Scalar>& f) {
  const BoxDomain& dom = f.domain;
  VectorFieldT<Scalar> g(dom);
  const int n0 = dom.cells(0), n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const Scalar inv_h = Scalar(1) / dom.spacing(a);
    const auto e = dom.face_extents(a);
    const long stride_cell =
        a == 0 ? static_cast<long>(n1) * n2 : (a == 1 ? n2 : 1);
    long fidx = 0;
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) {
            if (f.bc == Bc::DirichletZero) {
              // ghost = -interior: one-sided slope across the wall
              const int j0 = a == 0 ? std::min(i0, n0 - 1) : i0;
              const int j1 = a == 1 ? std::min(i1, n1 - 1) : i1;
              const int j2 = a == 2 ? std::min(i2, n2 - 1) : i2;
              const Scalar v = f.values[dom.cell_index(j0, j1, j2)];
              g.comp[a][fidx] = (own == 0 ? Scalar(2) : Scalar(-2)) * v * inv_h;
            }
            // Neumann: stays 0
            continue;
          }
          const long right = dom.cell_index(i0, i1, i2);
          g.comp[a][fidx] =
              (f.values[right] - f.values[right - stride_cell]) * inv_h;
        }
  }
  return g;
}

// Cell-centered divergence of a face field.
template <class Scalar>
FieldT<Scalar> divergence(const VectorFieldT<Scalar>& v) {
  const BoxDomain& dom = v.domain;
  FieldT<Scalar> out(dom);
  const int n0 = dom.cells(0), n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const Scalar inv_h = Scalar(1) / dom.spacing(a);
    const auto e = dom.face_extents(a);
    const long fstride =
        a == 0 ? static_cast<long>(e[1]) * e[2] : (a == 1 ? e[2] : 1);
    long cidx = 0;
    for (int i0 = 0; i0 < n0; ++i0)
      for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2, ++cidx) {
          const long lo = v.face_index(a, i0, i1, i2);
          out.values[cidx] += (v.comp[a][lo + fstride] - v.comp[a][lo]) * inv_h;
        }
  }
  return out;
}

// Fused 2d+1 point Laplacian with the same ghost convention; identical to
// divergence(gradient(f)) to round-off, kept as a direct stencil.
template <class Scalar>
FieldT<Scalar> laplacian(const FieldT<Scalar>& f) {
  const BoxDomain& dom = f.domain;
  FieldT<Scalar> out(dom, f.bc);
  const int n0 = dom.cells(0), n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const int na = dom.cells(a);
    const Scalar inv_h2 =
        Scalar(1) / (dom.spacing(a) * dom.spacing(a));
    const long stride =
        a == 0 ? static_cast<long>(n1) * n2 : (a == 1 ? n2 : 1);
    long cidx = 0;
    for (int i0 = 0; i0 < n0; ++i0)
      for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2, ++cidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          const Scalar c = f.values[cidx];
          const Scalar lo =
              own == 0 ? bc_ghost(c, f.bc) : f.values[cidx - stride];
          const Scalar hi =
              own == na - 1 ? bc_ghost(c, f.bc) : f.values[cidx + stride];
          out.values[cidx] += (lo - Scalar(2) * c + hi) * inv_h2;
        }
  }
  return out;
}

// ---- integrals, norms ------------------------------------------------------

template <class Scalar>
Scalar mass(const FieldT<Scalar>& f) {
  return f.values.sum() * static_cast<Scalar>(f.domain.cell_volume());
}

template <class Scalar>
Scalar mean(const FieldT<Scalar>& f) {
  return f.values.mean();
}

template <class Scalar>
Scalar lp_norm(const FieldT<Scalar>& f, double p) {
  if (std::isinf(p)) return f.values.abs().maxCoeff();
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  const Scalar w = static_cast<Scalar>(f.domain.cell_volume());
  if (p == 1.0) return f.values.abs().sum() * w;
  if (p == 2.0) return std::sqrt(f.values.square().sum() * w);
  return std::pow((f.values.abs().pow(p)).sum() * w, Scalar(1.0 / p));
}

template <class Scalar>
Scalar l2_norm_sq(const FieldT<Scalar>& f) {
  return f.values.square().sum() * static_cast<Scalar>(f.domain.cell_volume());
}

template <class Scalar>
Scalar cell_inner(const FieldT<Scalar>& f, const FieldT<Scalar>& g) {
  require_same_domain(f.domain, g.domain, "cell_inner");
  return (f.values * g.values).sum() *
         static_cast<Scalar>(f.domain.cell_volume());
}

template <class Scalar>
Scalar face_inner(const VectorFieldT<Scalar>& v, const VectorFieldT<Scalar>& w) {
  require_same_domain(v.domain, w.domain, "face_inner");
  Scalar s = 0;
  for (int a = 0; a < v.domain.dim(); ++a)
    s += (v.comp[a] * w.comp[a]).sum();
  return s * static_cast<Scalar>(v.domain.cell_volume());
}

// Euclidean magnitude reconstructed at cell centers (faces averaged per axis).
template <class Scalar>
FieldT<Scalar> cell_magnitude(const VectorFieldT<Scalar>& v) {
  const BoxDomain& dom = v.domain;
  FieldT<Scalar> out(dom);
  const int n0 = dom.cells(0), n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    const long fstride =
        a == 0 ? static_cast<long>(e[1]) * e[2] : (a == 1 ? e[2] : 1);
    long cidx = 0;
    for (int i0 = 0; i0 < n0; ++i0)
      for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2, ++cidx) {
          const long lo = v.face_index(a, i0, i1, i2);
          const Scalar avg =
              Scalar(0.5) * (v.comp[a][lo] + v.comp[a][lo + fstride]);
          out.values[cidx] += avg * avg;
        }
  }
  out.values = out.values.sqrt();
  return out;
}

template <class Scalar>
Scalar lp_norm(const VectorFieldT<Scalar>& v, double p) {
  return lp_norm(cell_magnitude(v), p);
}

// Largest face sample over all components (cheap sup, used by CFL/watchdog).
template <class Scalar>
Scalar face_linf(const VectorFieldT<Scalar>& v) {
  Scalar m = 0;
  for (int a = 0; a < v.domain.dim(); ++a)
    if (v.comp[a].size()) m = std::max(m, v.comp[a].abs().maxCoeff());
  return m;
}

template <class Scalar>
Scalar max_abs_divergence(const VectorFieldT<Scalar>& v) {
  return divergence(v).values.abs().maxCoeff();
}

// ---- upwind transport ------------------------------------------------------

// First-order upwind face flux of a cell quantity f carried by the face
// velocity w: flux_a = f_upwind * w_a.  Boundary faces carry exactly zero
// flux (no-flux walls), so divergence(upwind_flux(...)) conserves mass(f)
// to round-off.  Shared by momentum-free advection and chemotactic drift.
template <class Scalar>
VectorFieldT<Scalar> upwind_flux(const VectorFieldT<Scalar>& w,
                                 const FieldT<Scalar>& f) {
  require_same_domain(w.domain, f.domain, "upwind_flux");
  const BoxDomain& dom = f.domain;
  VectorFieldT<Scalar> flux(dom);
  const int n0 = dom.cells(0), n1 = dom.cells(1), n2 = dom.cells(2);
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    const long stride_cell =
        a == 0 ? static_cast<long>(n1) * n2 : (a == 1 ? n2 : 1);
    long fidx = 0;
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) continue;  // wall: zero flux
          const Scalar wv = w.comp[a][fidx];
          const long right = dom.cell_index(i0, i1, i2);
          const Scalar fup =
              wv >= Scalar(0) ? f.values[right - stride_cell] : f.values[right];
          flux.comp[a][fidx] = fup * wv;
        }
  }
  return flux;
}

// ---- velocity gradient (Frobenius convention) -------------------------------

// l^q norm of the full velocity gradient tensor.  Own-axis derivatives live
// at cell centers; cross-axis ones at edge midpoints, with no-slip mirror
// ghosts at the walls (ghost = -value), which is what resolves wall shear.
// Entries are weighted uniformly with h^d and treated component-wise.
template <class Scalar>
Scalar grad_lq_norm(const VectorFieldT<Scalar>& u, double q) {
  const BoxDomain& dom = u.domain;
  const Scalar w = static_cast<Scalar>(dom.cell_volume());
  const bool inf = std::isinf(q);
  Scalar acc = 0;
  auto feed = [&](Scalar d) {
    const Scalar ad = std::abs(d);
    if (inf)
      acc = std::max(acc, ad);
    else
      acc += std::pow(ad, static_cast<Scalar>(q)) * w;
  };
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    for (int b = 0; b < dom.dim(); ++b) {
      const Scalar inv_h = Scalar(1) / dom.spacing(b);
      const long bstride =
          b == 0 ? static_cast<long>(e[1]) * e[2] : (b == 1 ? e[2] : 1);
      long fidx = 0;
      for (int i0 = 0; i0 < e[0]; ++i0)
        for (int i1 = 0; i1 < e[1]; ++i1)
          for (int i2 = 0; i2 < e[2]; ++i2, ++fidx) {
            const int jb = b == 0 ? i0 : (b == 1 ? i1 : i2);
            if (a == b) {
              // difference of consecutive a-faces -> value at the cell center
              if (jb == e[b] - 1) continue;
              feed((u.comp[a][fidx + bstride] - u.comp[a][fidx]) * inv_h);
            } else {
              // difference along transverse axis b between a-face rows
              if (jb + 1 < e[b])
                feed((u.comp[a][fidx + bstride] - u.comp[a][fidx]) * inv_h);
              // wall shear via no-slip mirror ghost (ghost = -value)
              if (jb == 0) feed(Scalar(2) * u.comp[a][fidx] * inv_h);
              if (jb == e[b] - 1) feed(Scalar(2) * u.comp[a][fidx] * inv_h);
            }
          }
    }
  }
  return inf ? acc : std::pow(acc, static_cast<Scalar>(1.0 / q));
}

template <class Scalar>
Scalar grad_l2_sq(const VectorFieldT<Scalar>& u) {
  const Scalar n = grad_lq_norm(u, 2.0);
  return n * n;
}

}  // namespace ksns
