#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "ksns/field.hpp"

namespace ksns {

// Dense orthonormal transforms that diagonalize the grid operators exactly.
// At the grid sizes this code targets (n <= a few hundred per axis) a gemm
// per axis is fast, bit-deterministic, and the inverse is exactly the
// transpose, which keeps round trips and adjointness at round-off.
//
// Bases and the 1D second-difference eigenvalues they carry
// (lambda_k = (2/h^2)(1 - cos(pi k / n)), listed per mode):
//  * cosine_cells        cell centers, mirror ghost (Neumann), k = 0..n-1
//  * sine_interior_faces interior own-axis faces, endpoints pinned (k = 1..n-1)
//  * sine_cells_antimirror cell-offset samples with ghost = -interior
//    (transverse no-slip closure), k = 1..n

template <class Scalar>
struct AxisTransform {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Matrix fwd;    // modes x points, orthonormal (inverse = transpose)
  Array lambda;  // second-difference eigenvalue per mode (>= 0)

  static AxisTransform cosine_cells(int n, double h) {
    AxisTransform t;
    t.fwd.resize(n, n);
    t.lambda.resize(n);
    for (int k = 0; k < n; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i)
        t.fwd(k, i) =
            static_cast<Scalar>(scale * std::cos(M_PI * k * (i + 0.5) / n));
      t.lambda[k] = static_cast<Scalar>(
          2.0 / (h * h) * (1.0 - std::cos(M_PI * k / n)));
    }
    return t;
  }

  static AxisTransform sine_interior_faces(int n, double h) {
    AxisTransform t;
    t.fwd.resize(n - 1, n - 1);
    t.lambda.resize(n - 1);
    const double scale = std::sqrt(2.0 / n);
    for (int k = 1; k < n; ++k) {
      for (int j = 1; j < n; ++j)
        t.fwd(k - 1, j - 1) =
            static_cast<Scalar>(scale * std::sin(M_PI * k * j / n));
      t.lambda[k - 1] = static_cast<Scalar>(
          2.0 / (h * h) * (1.0 - std::cos(M_PI * k / n)));
    }
    return t;
  }

  static AxisTransform sine_cells_antimirror(int n, double h) {
    AxisTransform t;
    t.fwd.resize(n, n);
    t.lambda.resize(n);
    for (int k = 1; k <= n; ++k) {
      const double scale = k == n ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i)
        t.fwd(k - 1, i) =
            static_cast<Scalar>(scale * std::sin(M_PI * k * (i + 0.5) / n));
      t.lambda[k - 1] = static_cast<Scalar>(
          2.0 / (h * h) * (1.0 - std::cos(M_PI * k / n)));
    }
    return t;
  }
};

// Apply M (or its transpose) along one axis of a row-major rank-3 array.
// All bases here are square, so extents do not change.
template <class Scalar>
void apply_axis(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& in,
                Eigen::Array<Scalar, Eigen::Dynamic, 1>& out,
                const std::array<long, 3>& dims, int axis,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M,
                bool transpose) {
  using RowMat =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const long d0 = dims[0], d1 = dims[1], d2 = dims[2];
  out.resize(in.size());
  if (axis == 0) {
    Eigen::Map<const RowMat> src(in.data(), d0, d1 * d2);
    Eigen::Map<RowMat> dst(out.data(), d0, d1 * d2);
    dst.noalias() = transpose ? (M.transpose() * src).eval() : (M * src).eval();
  } else if (axis == 2) {
    Eigen::Map<const RowMat> src(in.data(), d0 * d1, d2);
    Eigen::Map<RowMat> dst(out.data(), d0 * d1, d2);
    dst.noalias() = transpose ? (src * M).eval() : (src * M.transpose()).eval();
  } else {
    for (long i0 = 0; i0 < d0; ++i0) {
      Eigen::Map<const RowMat> src(in.data() + i0 * d1 * d2, d1, d2);
      Eigen::Map<RowMat> dst(out.data() + i0 * d1 * d2, d1, d2);
      dst.noalias() =
          transpose ? (M.transpose() * src).eval() : (M * src).eval();
    }
  }
}

// Row-major tensor built from per-axis vectors: out[idx] = op over axes.
template <class Scalar, class Op>
Eigen::Array<Scalar, Eigen::Dynamic, 1> separable_combine(
    const std::array<long, 3>& dims,
    const std::array<const Eigen::Array<Scalar, Eigen::Dynamic, 1>*, 3>& per_axis,
    int naxes, Scalar init, Op op) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(dims[0] * dims[1] * dims[2]);
  long idx = 0;
  for (long i0 = 0; i0 < dims[0]; ++i0)
    for (long i1 = 0; i1 < dims[1]; ++i1)
      for (long i2 = 0; i2 < dims[2]; ++i2, ++idx) {
        Scalar v = init;
        if (naxes > 0) v = op(v, (*per_axis[0])[i0]);
        if (naxes > 1) v = op(v, (*per_axis[1])[i1]);
        if (naxes > 2) v = op(v, (*per_axis[2])[i2]);
        out[idx] = v;
      }
  return out;
}

// Cosine diagonalization of the cell-centered Neumann Laplacian.
template <class Scalar>
class SpectralCell {
public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit SpectralCell(const BoxDomain& dom) : dom_(dom) {
    for (int a = 0; a < dom.dim(); ++a) {
      ax_[a] = AxisTransform<Scalar>::cosine_cells(dom.cells(a), dom.spacing(a));
      dims_[a] = dom.cells(a);
    }
    for (int a = dom.dim(); a < 3; ++a) dims_[a] = 1;
    std::array<const Array*, 3> lam{&ax_[0].lambda, &ax_[1].lambda,
                                    &ax_[2].lambda};
    lambda_ = separable_combine<Scalar>(dims_, lam, dom.dim(), Scalar(0),
                                        [](Scalar a, Scalar b) { return a + b; });
  }

  const BoxDomain& domain() const { return dom_; }
  const Array& eigenvalues() const { return lambda_; }

  Array to_modes(const FieldT<Scalar>& f) const {
    require_same_domain(f.domain, dom_, "SpectralCell::to_modes");
    Array cur = f.values, tmp;
    for (int a = 0; a < dom_.dim(); ++a) {
      apply_axis(cur, tmp, dims_, a, ax_[a].fwd, false);
      cur.swap(tmp);
    }
    return cur;
  }

  FieldT<Scalar> from_modes(const Array& modes) const {
    FieldT<Scalar> f(dom_);
    Array cur = modes, tmp;
    for (int a = 0; a < dom_.dim(); ++a) {
      apply_axis(cur, tmp, dims_, a, ax_[a].fwd, true);
      cur.swap(tmp);
    }
    f.values = std::move(cur);
    return f;
  }

  // exp(t * Laplacian): multiplier exp(-t lambda) assembled separably per
  // axis, so no mode underflows through a subtraction.
  Array heat_multiplier(double t) const {
    std::array<Array, 3> e;
    std::array<const Array*, 3> p{};
    for (int a = 0; a < dom_.dim(); ++a) {
      e[a] = (-t * ax_[a].lambda.template cast<double>())
                 .exp()
                 .template cast<Scalar>();
      p[a] = &e[a];
    }
    return separable_combine<Scalar>(dims_, p, dom_.dim(), Scalar(1),
                                     [](Scalar a, Scalar b) { return a * b; });
  }

  FieldT<Scalar> heat(const FieldT<Scalar>& f, double t) const {
    Array m = to_modes(f);
    m *= heat_multiplier(t);
    return from_modes(m);
  }

  // Zero-mean solution of Laplacian(q) = rhs (the mode-0 component of rhs is
  // discarded; it is zero whenever rhs is a discrete divergence).
  FieldT<Scalar> poisson_neumann(const FieldT<Scalar>& rhs) const {
    Array m = to_modes(rhs);
    m[0] = Scalar(0);
    for (long i = 1; i < m.size(); ++i) m[i] = -m[i] / lambda_[i];
    return from_modes(m);
  }

private:
  BoxDomain dom_;
  std::array<AxisTransform<Scalar>, 3> ax_;
  std::array<long, 3> dims_;
  Array lambda_;
};

// Sine diagonalization of one velocity component under no-slip closure:
// interior faces along the own axis, anti-mirror ghosts transversally.
// Boundary normal faces are excluded (pinned at zero).
template <class Scalar>
class SpectralFace {
public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  SpectralFace(const BoxDomain& dom, int axis) : dom_(dom), axis_(axis) {
    for (int a = 0; a < dom.dim(); ++a) {
      const int n = dom.cells(a);
      if (a == axis) {
        ax_[a] = AxisTransform<Scalar>::sine_interior_faces(n, dom.spacing(a));
        dims_[a] = n - 1;
      } else {
        ax_[a] = AxisTransform<Scalar>::sine_cells_antimirror(n, dom.spacing(a));
        dims_[a] = n;
      }
    }
    for (int a = dom.dim(); a < 3; ++a) dims_[a] = 1;
    std::array<const Array*, 3> lam{&ax_[0].lambda, &ax_[1].lambda,
                                    &ax_[2].lambda};
    lambda_ = separable_combine<Scalar>(dims_, lam, dom.dim(), Scalar(0),
                                        [](Scalar a, Scalar b) { return a + b; });
  }

  const Array& eigenvalues() const { return lambda_; }

  // Interior slice of the face array (drops the two boundary layers along
  // the own axis).
  Array extract_interior(const Array& faces) const {
    const auto e = dom_.face_extents(axis_);
    Array out(dims_[0] * dims_[1] * dims_[2]);
    long o = 0;
    for (long i0 = 0; i0 < e[0]; ++i0)
      for (long i1 = 0; i1 < e[1]; ++i1)
        for (long i2 = 0; i2 < e[2]; ++i2) {
          const long own = axis_ == 0 ? i0 : (axis_ == 1 ? i1 : i2);
          if (own == 0 || own == e[axis_] - 1) continue;
          out[o++] = faces[(i0 * e[1] + i1) * e[2] + i2];
        }
    return out;
  }

  Array insert_interior(const Array& interior) const {
    const auto e = dom_.face_extents(axis_);
    Array out = Array::Zero(static_cast<long>(e[0]) * e[1] * e[2]);
    long o = 0;
    for (long i0 = 0; i0 < e[0]; ++i0)
      for (long i1 = 0; i1 < e[1]; ++i1)
        for (long i2 = 0; i2 < e[2]; ++i2) {
          const long own = axis_ == 0 ? i0 : (axis_ == 1 ? i1 : i2);
          if (own == 0 || own == e[axis_] - 1) continue;
          out[(i0 * e[1] + i1) * e[2] + i2] = interior[o++];
        }
    return out;
  }

  Array to_modes(const Array& faces) const {
    Array cur = extract_interior(faces), tmp;
    for (int a = 0; a < dom_.dim(); ++a) {
      apply_axis(cur, tmp, dims_, a, ax_[a].fwd, false);
      cur.swap(tmp);
    }
    return cur;
  }

  Array from_modes(const Array& modes) const {
    Array cur = modes, tmp;
    for (int a = 0; a < dom_.dim(); ++a) {
      apply_axis(cur, tmp, dims_, a, ax_[a].fwd, true);
      cur.swap(tmp);
    }
    return insert_interior(cur);
  }

  Array decay_multiplier(double t) const {
    std::array<Array, 3> e;
    std::array<const Array*, 3> p{};
    for (int a = 0; a < dom_.dim(); ++a) {
      e[a] = (-t * ax_[a].lambda.template cast<double>())
                 .exp()
                 .template cast<Scalar>();
      p[a] = &e[a];
    }
    return separable_combine<Scalar>(dims_, p, dom_.dim(), Scalar(1),
                                     [](Scalar a, Scalar b) { return a * b; });
  }

  // exp(t * component Laplacian) with no-slip closure.
  Array flow(const Array& faces, double t) const {
    Array m = to_modes(faces);
    m *= decay_multiplier(t);
    return from_modes(m);
  }

private:
  BoxDomain dom_;
  int axis_;
  std::array<AxisTransform<Scalar>, 3> ax_;
  std::array<long, 3> dims_;
  Array lambda_;
};

}  // namespace ksns
