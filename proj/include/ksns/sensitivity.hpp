#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "ksns/box_domain.hpp"

namespace ksns {

// Chemotactic sensitivity S(x, rho, c): a matrix-valued coefficient with a
// uniform spectral-norm bound, optionally forced to zero near the walls by a
// smooth cutoff (width eta * min(L)/2; identically 0 inside the first half of
// the collar, identically 1 outside it).
class SensitivityTensor {
public:
  using Evaluator = std::function<Eigen::Matrix3d(const Eigen::Vector3d& x,
                                                  double rho, double c)>;

  SensitivityTensor() : SensitivityTensor(zero()) {}

  SensitivityTensor(Evaluator eval, double bound, double eta,
                    std::string kind = "custom")
      : eval_(std::move(eval)), bound_(bound), eta_(eta), kind_(std::move(kind)) {
    if (!(bound_ >= 0.0) || !std::isfinite(bound_))
      throw std::invalid_argument("SensitivityTensor: bound must be finite, >= 0");
    if (!(eta_ >= 0.0) || eta_ >= 1.0)
      throw std::invalid_argument("SensitivityTensor: eta must be in [0,1)");
  }

  static SensitivityTensor zero() {
    return SensitivityTensor(
        [](const Eigen::Vector3d&, double, double) {
          return Eigen::Matrix3d::Zero().eval();
        },
        0.0, 0.0, "zero");
  }

  // chi * I: the classical scalar sensitivity.
  static SensitivityTensor identity_chi(double chi, double eta = 0.0) {
    return SensitivityTensor(
        [chi](const Eigen::Vector3d&, double, double) {
          return (chi * Eigen::Matrix3d::Identity()).eval();
        },
        std::abs(chi), eta, "identity_chi");
  }

  // In-plane rotation by pi/4 scaled by chi: drift at an angle to grad c,
  // the standard genuinely-tensorial test case.
  static SensitivityTensor rotational(double chi, double eta = 0.0) {
    const double c = chi * M_SQRT1_2;
    return SensitivityTensor(
        [c](const Eigen::Vector3d&, double, double) {
          Eigen::Matrix3d s = Eigen::Matrix3d::Identity() * c;
          s(0, 1) = -c;
          s(1, 0) = c;
          s(2, 2) = std::abs(c) * M_SQRT2;  // keep the 3D block at |chi|
          return s;
        },
        std::abs(chi), eta, "rotational");
  }

  // Fully general exercise of the interface: an in-plane rotation whose
  // angle depends on the local state, scaled by chi and wall-cut by eta.
  // Rotations are orthogonal, so the bound |chi| is tight at every sample.
  static SensitivityTensor state_rotation(double chi, double eta = 0.0) {
    return SensitivityTensor(
        [chi](const Eigen::Vector3d&, double rho, double c) {
          const double th = rho - c;
          Eigen::Matrix3d s = Eigen::Matrix3d::Identity() * chi;
          const double cs = std::cos(th), sn = std::sin(th);
          s(0, 0) = chi * cs;
          s(0, 1) = -chi * sn;
          s(1, 0) = chi * sn;
          s(1, 1) = chi * cs;
          return s;
        },
        std::abs(chi), eta, "state_rotation");
  }

  const std::string& kind() const { return kind_; }
  double bound() const { return bound_; }
  double eta() const { return eta_; }
  bool is_zero() const { return kind_ == "zero"; }

  // Smooth wall cutoff: identically 0 within eta*min(L)/2 of the boundary,
  // identically 1 beyond twice that collar, C^inf bridge in between.
  double cutoff(const BoxDomain& dom, const Eigen::Vector3d& x) const {
    if (eta_ == 0.0) return 1.0;
    const double w = 0.5 * eta_ * dom.min_length();
    double dist = 1e300;
    for (int a = 0; a < dom.dim(); ++a)
      dist = std::min(dist, std::min(x[a], dom.length(a) - x[a]));
    if (dist <= w) return 0.0;
    if (dist >= 2.0 * w) return 1.0;
    auto g = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    const double u = (dist - w) / w;
    return g(u) / (g(u) + g(1.0 - u));
  }

  Eigen::Matrix3d eval(const BoxDomain& dom, const Eigen::Vector3d& x,
                       double rho, double c) const {
    return cutoff(dom, x) * eval_(x, rho, c);
  }

  // Spectral norm of the raw evaluator at one sample (cutoff only shrinks
  // it), via the closed-form symmetric 3x3 eigensolve of S^T S.
  double sample_norm(const Eigen::Vector3d& x, double rho, double c,
                     int dim) const {
    Eigen::Matrix3d s = eval_(x, rho, c);
    if (dim == 2) {
      s.row(2).setZero();
      s.col(2).setZero();
    }
    if ((s.array() == 0.0).all()) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(s.transpose() * s, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }

private:
  Evaluator eval_;
  double bound_;
  double eta_;
  std::string kind_;
};

}  // namespace ksns
