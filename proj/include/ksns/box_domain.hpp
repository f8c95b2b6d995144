#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ksns {

// Axis-aligned box [0,L0]x[0,L1](x[0,L2]) with a uniform cell grid.
// Scalars live at cell centers, velocity components at face centers
// (MAC layout).  Internally everything is carried as 3D with trailing
// extents 1, so dim==2 domains use cells {n0,n1,1}; loops over axis a
// always range over a < dim().
class BoxDomain {
public:
  BoxDomain(int dim, std::array<int, 3> cells, std::array<double, 3> lengths)
      : dim_(dim), cells_(cells), lengths_(lengths) {
    if (dim != 2 && dim != 3)
      throw std::invalid_argument("BoxDomain: dim must be 2 or 3");
    for (int a = dim; a < 3; ++a) {
      cells_[a] = 1;
      lengths_[a] = 1.0;
    }
    double hmin = 1e300, hmax = 0.0;
    for (int a = 0; a < dim; ++a) {
      if (cells_[a] < 4)
        throw std::invalid_argument("BoxDomain: need at least 4 cells per axis");
      if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a]))
        throw std::invalid_argument("BoxDomain: axis lengths must be positive");
      const double h = lengths_[a] / cells_[a];
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
    }
    if (hmax > 4.0 * hmin + 1e-12 * hmin)
      throw std::invalid_argument("BoxDomain: cell anisotropy above 4x is not supported");
  }

  static BoxDomain cube(int dim, int n, double length) {
    return BoxDomain(dim, {n, n, n}, {length, length, length});
  }

  int dim() const { return dim_; }
  int cells(int a) const { return cells_[a]; }
  const std::array<int, 3>& cells() const { return cells_; }
  double length(int a) const { return lengths_[a]; }
  const std::array<double, 3>& lengths() const { return lengths_; }
  double spacing(int a) const { return lengths_[a] / cells_[a]; }

  double min_spacing() const {
    double h = 1e300;
    for (int a = 0; a < dim_; ++a) h = std::min(h, spacing(a));
    return h;
  }

  double min_length() const {
    double L = 1e300;
    for (int a = 0; a < dim_; ++a) L = std::min(L, lengths_[a]);
    return L;
  }

  long cell_count() const {
    return static_cast<long>(cells_[0]) * cells_[1] * cells_[2];
  }

  // Faces of velocity component a: one extra sample along the own axis.
  std::array<int, 3> face_extents(int a) const {
    std::array<int, 3> e = cells_;
    e[a] += 1;
    return e;
  }

  long face_count(int a) const {
    auto e = face_extents(a);
    return static_cast<long>(e[0]) * e[1] * e[2];
  }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
  }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= lengths_[a];
    return v;
  }

  // First nonzero Neumann Laplacian eigenvalue of the box, min_a (pi/L_a)^2.
  double lambda1() const {
    double lam = 1e300;
    for (int a = 0; a < dim_; ++a) {
      const double v = (M_PI / lengths_[a]) * (M_PI / lengths_[a]);
      lam = std::min(lam, v);
    }
    return lam;
  }

  // Same for the grid Laplacian: the k=1 cosine mode along the longest axis,
  // (2/h^2)(1 - cos(pi h / L)).  Converges to lambda1() at O(h^2).
  double lambda1_discrete() const {
    double lam = 1e300;
    for (int a = 0; a < dim_; ++a) {
      const double h = spacing(a);
      const double v = 2.0 / (h * h) * (1.0 - std::cos(M_PI * h / lengths_[a]));
      lam = std::min(lam, v);
    }
    return lam;
  }

  // Row-major linear index over cells.
  long cell_index(int i0, int i1, int i2 = 0) const {
    return (static_cast<long>(i0) * cells_[1] + i1) * cells_[2] + i2;
  }

  // Cell-center coordinate along axis a.
  double cell_x(int a, int i) const { return (i + 0.5) * spacing(a); }
  // Face-center coordinate along the own axis of component a.
  double face_x(int a, int i) const { return i * spacing(a); }

  bool operator==(const BoxDomain& o) const {
    return dim_ == o.dim_ && cells_ == o.cells_ && lengths_ == o.lengths_;
  }
  bool operator!=(const BoxDomain& o) const { return !(*this == o); }

private:
  int dim_;
  std::array<int, 3> cells_;
  std::array<double, 3> lengths_;
};

inline void require_same_domain(const BoxDomain& a, const BoxDomain& b,
                                const char* where) {
  if (a != b)
    throw std::invalid_argument(std::string(where) +
                                ": operands live on different domains");
}

}  // namespace ksns
