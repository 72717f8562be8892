#ifndef HYBRID_SPACE_HPP
#define HYBRID_SPACE_HPP

// Geometry of R^n equipped with either the Euclidean norm (Hilbert case) or
// an l_p norm.  Primal vectors and dual vectors are both plain Eigen column
// vectors; they are paired through the ordinary dot product.
//
// The free functions are templated on the Eigen expression type so that
// callers can pass blocks, maps or arithmetic expressions without copies,
// and so that the scalar type is not fixed to double.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>

#include "hybrid/errors.hpp"

namespace hybrid {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;      // element of E
using DualVector = Eigen::VectorXd;  // element of E*
using Matrix = Eigen::MatrixXd;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class SpaceKind { hilbert, lp };

class SpaceSpec {
 public:
  static SpaceSpec hilbert(Index dim);
  //! l_p on R^dim.  For 1 < p <= 2 the 2-uniform-convexity constant c
  //! defaults to sqrt(p - 1) and is validated by sampling.
  static SpaceSpec lp(Index dim, double p, std::optional<double> c = std::nullopt);

  SpaceKind kind() const { return kind_; }
  bool is_hilbert() const { return kind_ == SpaceKind::hilbert; }
  Index dim() const { return dim_; }
  //! Exponent of the primal norm (2 for Hilbert).
  double p() const { return p_; }
  //! Conjugate exponent, 1/p + 1/q = 1.
  double q() const { return p_ / (p_ - 1.0); }

  bool two_uniformly_convex() const { return is_hilbert() || p_ <= 2.0; }
  //! Throws ConfigError when the space is l_p with p > 2.
  double convexity_constant() const;

  //! The same geometry routed through the general l_p formulas (p = 2, c = 1).
  //! Used to cross-check the Hilbert shortcuts against the general code path.
  SpaceSpec generic_twin() const;

  void check_dim(Index n, const char* what) const {
    if (n != dim_) {
      throw DimensionError(std::string(what) + ": expected dimension " +
                           std::to_string(dim_) + ", got " + std::to_string(n));
    }
  }

  std::string describe() const;

  friend bool operator==(const SpaceSpec&, const SpaceSpec&) = default;

 private:
  SpaceSpec(SpaceKind kind, Index dim, double p, double c)
      : kind_(kind), dim_(dim), p_(p), c_(c) {}

  SpaceKind kind_;
  Index dim_;
  double p_;
  double c_;  // NaN when p > 2
};

//! Worst relative slack of ||x - y|| <= (2 / c^2) ||Jx - Jy||_* over a
//! deterministic sample of pairs; negative means the inequality failed.
double sampled_convexity_margin(const SpaceSpec& space, double c, int samples);

namespace detail {

// ||x||_p computed with max-scaling so large p does not overflow.
template <typename Derived>
typename Derived::Scalar power_norm(const Eigen::MatrixBase<Derived>& x,
                                    typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  using std::pow;
  const Scalar m = x.size() == 0 ? Scalar(0) : x.cwiseAbs().maxCoeff();
  if (m == Scalar(0)) return Scalar(0);
  if (p == Scalar(2)) return x.stableNorm();
  const Scalar s = (x.cwiseAbs() / m).array().pow(p).sum();
  return m * pow(s, Scalar(1) / p);
}

// Duality map of l_p: ||x||^{2-p} * (x_i |x_i|^{p-2}), written as
// ||x|| * sign(x_i) (|x_i| / ||x||)^{p-1}.  0 * |0|^{p-2} is taken as 0.
template <typename Derived>
VectorX<typename Derived::Scalar> power_duality(const Eigen::MatrixBase<Derived>& x,
                                                typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::pow;
  VectorX<Scalar> out(x.size());
  const Scalar nrm = power_norm(x, p);
  if (nrm == Scalar(0)) return out.setZero();
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x(i);
    if (xi == Scalar(0)) {
      out(i) = Scalar(0);
    } else {
      const Scalar mag = nrm * pow(abs(xi) / nrm, p - Scalar(1));
      out(i) = xi > Scalar(0) ? mag : -mag;
    }
  }
  return out;
}

// phi(x, y) for l_p written as (||x||^2 - ||y||^2) - 2 <x - y, Jy>, with the
// difference of squared norms formed through log1p/expm1 so that nearby
// points do not lose all digits to cancellation.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar power_phi(const Eigen::MatrixBase<DerivedX>& x,
                                    const Eigen::MatrixBase<DerivedY>& y,
                                    typename DerivedX::Scalar p) {
  using Scalar = typename DerivedX::Scalar;
  using std::abs;
  using std::expm1;
  using std::log1p;
  using std::pow;
  const Scalar mx = x.size() == 0 ? Scalar(0) : x.cwiseAbs().maxCoeff();
  const Scalar my = y.size() == 0 ? Scalar(0) : y.cwiseAbs().maxCoeff();
  const Scalar m = mx > my ? mx : my;
  if (m == Scalar(0)) return Scalar(0);
  const VectorX<Scalar> xs = x / m;
  const VectorX<Scalar> ys = y / m;
  const Scalar sy = ys.cwiseAbs().array().pow(p).sum();
  const Scalar ny = power_norm(ys, p);
  if (sy == Scalar(0)) {
    const Scalar nx = power_norm(xs, p);
    return m * m * nx * nx;
  }
  // sum_i |x_i|^p - |y_i|^p
  Scalar ds(0);
  for (Index i = 0; i < xs.size(); ++i) {
    const Scalar a = abs(xs(i));
    const Scalar b = abs(ys(i));
    if (b == Scalar(0)) {
      ds += pow(a, p);
    } else {
      ds += pow(b, p) * expm1(p * log1p((a - b) / b));
    }
  }
  const Scalar dsq = ny * ny * expm1((Scalar(2) / p) * log1p(ds / sy));
  const Scalar value = dsq - Scalar(2) * (xs - ys).dot(power_duality(ys, p));
  return value < Scalar(0) ? Scalar(0) : m * m * value;
}

}  // namespace detail

template <typename Derived>
typename Derived::Scalar norm(const SpaceSpec& space, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  space.check_dim(x.size(), "norm");
  if (space.is_hilbert()) return x.stableNorm();
  return detail::power_norm(x, Scalar(space.p()));
}

template <typename Derived>
typename Derived::Scalar dual_norm(const SpaceSpec& space, const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  space.check_dim(u.size(), "dual_norm");
  if (space.is_hilbert()) return u.stableNorm();
  return detail::power_norm(u, Scalar(space.q()));
}

//! Normalized duality map J: E -> E*.
template <typename Derived>
VectorX<typename Derived::Scalar> duality_map(const SpaceSpec& space,
                                              const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  space.check_dim(x.size(), "duality_map");
  if (space.is_hilbert()) return x;
  return detail::power_duality(x, Scalar(space.p()));
}

//! J^{-1}: E* -> E, the duality map of the dual l_q space.
template <typename Derived>
VectorX<typename Derived::Scalar> duality_map_inverse(const SpaceSpec& space,
                                                      const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  space.check_dim(u.size(), "duality_map_inverse");
  if (space.is_hilbert()) return u;
  return detail::power_duality(u, Scalar(space.q()));
}

//! Jacobian of J at x (the Hessian of ||x||^2 / 2).  Coordinates whose
//! relative magnitude falls below `floor` are clamped there, which keeps the
//! matrix finite for p < 2 and nonsingular for p > 2.  Identity at x = 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> duality_map_jacobian(
    const SpaceSpec& space, const Eigen::MatrixBase<Derived>& x,
    typename Derived::Scalar floor = typename Derived::Scalar(1e-8)) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::max;
  using std::pow;
  space.check_dim(x.size(), "duality_map_jacobian");
  const Index n = x.size();
  if (space.is_hilbert()) return Mat::Identity(n, n);
  const Scalar p(space.p());
  const Scalar nrm = detail::power_norm(x, p);
  if (nrm == Scalar(0)) return Mat::Identity(n, n);
  VectorX<Scalar> sigma(n);
  VectorX<Scalar> diag(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar r = abs(x(i)) / nrm;
    const Scalar mag = pow(r, p - Scalar(1));
    sigma(i) = x(i) >= Scalar(0) ? mag : -mag;
    diag(i) = (p - Scalar(1)) * pow(max(r, floor), p - Scalar(2));
  }
  Mat jac = (Scalar(2) - p) * sigma * sigma.transpose();
  jac.diagonal() += diag;
  return jac;
}

//! phi(x, y) = ||x||^2 - 2 <x, Jy> + ||y||^2.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar lyapunov_phi(const SpaceSpec& space,
                                       const Eigen::MatrixBase<DerivedX>& x,
                                       const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  space.check_dim(x.size(), "lyapunov_phi");
  space.check_dim(y.size(), "lyapunov_phi");
  if (space.is_hilbert()) return (x - y).squaredNorm();
  return detail::power_phi(x, y, Scalar(space.p()));
}

//! V(x, x*) = ||x||^2 - 2 <x, x*> + ||x*||_*^2, equal to phi(x, J^{-1} x*).
template <typename DerivedX, typename DerivedU>
typename DerivedX::Scalar v_functional(const SpaceSpec& space,
                                       const Eigen::MatrixBase<DerivedX>& x,
                                       const Eigen::MatrixBase<DerivedU>& u) {
  using Scalar = typename DerivedX::Scalar;
  space.check_dim(x.size(), "v_functional");
  space.check_dim(u.size(), "v_functional");
  const Scalar nx = norm(space, x);
  const Scalar nu = dual_norm(space, u);
  return nx * nx - Scalar(2) * x.dot(u) + nu * nu;
}

}  // namespace hybrid

#endif  // HYBRID_SPACE_HPP
