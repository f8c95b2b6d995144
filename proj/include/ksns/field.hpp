#pragma once

#include <Eigen/Core>
#include <array>
#include <utility>

#include "ksns/box_domain.hpp"

namespace ksns {

enum class Bc { NeumannHomogeneous, DirichletZero };

// Cell-centered scalar samples in row-major order.  Values are an Eigen
// array so callers can use expression arithmetic on .values directly.
template <class Scalar>
struct FieldT {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BoxDomain domain;
  Array values;
  Bc bc = Bc::NeumannHomogeneous;

  FieldT() : domain(2, {4, 4, 1}, {1, 1, 1}) {}
  explicit FieldT(const BoxDomain& dom, Bc bc_ = Bc::NeumannHomogeneous)
      : domain(dom), values(Array::Zero(dom.cell_count())), bc(bc_) {}

  Scalar& operator()(int i0, int i1, int i2 = 0) {
    return values[domain.cell_index(i0, i1, i2)];
  }
  Scalar operator()(int i0, int i1, int i2 = 0) const {
    return values[domain.cell_index(i0, i1, i2)];
  }
};

// Face-staggered vector field: comp[a] holds the a-component at a-faces,
// extents cells with +1 along axis a.  Boundary normal faces carry the
// no-slip/no-flux value and are kept at exactly zero by the operators that
// construct these fields.
template <class Scalar>
struct VectorFieldT {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BoxDomain domain;
  std::array<Array, 3> comp;

  VectorFieldT() : domain(2, {4, 4, 1}, {1, 1, 1}) {}
  explicit VectorFieldT(const BoxDomain& dom) : domain(dom) {
    for (int a = 0; a < dom.dim(); ++a)
      comp[a] = Array::Zero(dom.face_count(a));
    for (int a = dom.dim(); a < 3; ++a) comp[a] = Array();
  }

  long face_index(int a, int i0, int i1, int i2 = 0) const {
    const auto e = domain.face_extents(a);
    return (static_cast<long>(i0) * e[1] + i1) * e[2] + i2;
  }
  Scalar& at(int a, int i0, int i1, int i2 = 0) {
    return comp[a][face_index(a, i0, i1, i2)];
  }
  Scalar at(int a, int i0, int i1, int i2 = 0) const {
    return comp[a][face_index(a, i0, i1, i2)];
  }
};

using Field = FieldT<double>;
using VectorField = VectorFieldT<double>;

// Fill a field by sampling f(x0,x1,x2) at cell centers.
template <class Scalar = double, class F>
FieldT<Scalar> sample_cells(const BoxDomain& dom, F&& f,
                            Bc bc = Bc::NeumannHomogeneous) {
  FieldT<Scalar> out(dom, bc);
  long idx = 0;
  for (int i0 = 0; i0 < dom.cells(0); ++i0)
    for (int i1 = 0; i1 < dom.cells(1); ++i1)
      for (int i2 = 0; i2 < dom.cells(2); ++i2, ++idx)
        out.values[idx] = f(dom.cell_x(0, i0), dom.cell_x(1, i1),
                            dom.dim() == 3 ? dom.cell_x(2, i2) : 0.0);
  return out;
}

// Fill component a of a vector field by sampling at its face centers.
// Boundary normal faces are sampled too; pass functions vanishing there
// (or call zero_boundary_faces afterwards) to keep the no-slip invariant.
template <class Scalar, class F>
void sample_faces(VectorFieldT<Scalar>& v, int a, F&& f) {
  const auto& dom = v.domain;
  const auto e = dom.face_extents(a);
  long idx = 0;
  for (int i0 = 0; i0 < e[0]; ++i0)
    for (int i1 = 0; i1 < e[1]; ++i1)
      for (int i2 = 0; i2 < e[2]; ++i2, ++idx) {
        const double x0 = a == 0 ? dom.face_x(0, i0) : dom.cell_x(0, i0);
        const double x1 = a == 1 ? dom.face_x(1, i1) : dom.cell_x(1, i1);
        const double x2 = dom.dim() < 3 ? 0.0
                          : (a == 2 ? dom.face_x(2, i2) : dom.cell_x(2, i2));
        v.comp[a][idx] = f(x0, x1, x2);
      }
}

// Clamp boundary normal faces of every component to zero (no-slip / no-flux).
template <class Scalar>
void zero_boundary_faces(VectorFieldT<Scalar>& v) {
  const auto& dom = v.domain;
  for (int a = 0; a < dom.dim(); ++a) {
    const auto e = dom.face_extents(a);
    for (int i0 = 0; i0 < e[0]; ++i0)
      for (int i1 = 0; i1 < e[1]; ++i1)
        for (int i2 = 0; i2 < e[2]; ++i2) {
          const int own = a == 0 ? i0 : (a == 1 ? i1 : i2);
          if (own == 0 || own == e[a] - 1) v.at(a, i0, i1, i2) = Scalar(0);
        }
  }
}

}  // namespace ksns
