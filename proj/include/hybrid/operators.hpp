#ifndef HYBRID_OPERATORS_HPP
#define HYBRID_OPERATORS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "hybrid/convex_set.hpp"
#include "hybrid/space.hpp"

namespace hybrid {

//! Outcome of a sampled inequality check.  The margin of one sample is the
//! slack of the inequality (negative means it failed); worst_margin is the
//! smallest margin seen.
struct SampleReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
  std::string note;

  bool ok() const { return violations == 0; }
  void add(double margin, double tol);
};

//! Affine monotone map x -> Q x + q.  Every catalog entry is affine, so the
//! variants only differ in how they are built and reported.
class MonotoneMap {
 public:
  enum class Kind { zero, affine, quadratic_gradient };

  static MonotoneMap zero(Index dim);
  //! Requires lambda_min((Q + Q^T) / 2) >= -1e-10.
  static MonotoneMap affine(Matrix Q, Vector q);
  //! Gradient of z -> 1/2 <z - a, H (z - a)>, i.e. H z - H a; H symmetric PSD.
  static MonotoneMap quadratic_gradient(Matrix H, Vector a);

  Kind kind() const { return kind_; }
  Index dim() const { return q_.size(); }
  const Matrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }

  DualVector operator()(const Vector& x) const { return Q_ * x + q_; }

  bool is_zero() const { return Q_.isZero(0.0) && q_.isZero(0.0); }
  bool symmetric() const;
  //! Largest eigenvalue of (Q + Q^T) / 2.
  double lambda_max_sym() const;
  //! Spectral norm of Q.
  double lipschitz() const;

  //! { x : Q x + q = 0 }, or nullopt when the map has no zero.
  std::optional<ConvexSet> zero_set() const;
  std::string describe() const;

 private:
  MonotoneMap(Kind kind, Matrix Q, Vector q) : kind_(kind), Q_(std::move(Q)), q_(std::move(q)) {}

  Kind kind_;
  Matrix Q_;
  Vector q_;
};

MonotoneMap operator+(const MonotoneMap& a, const MonotoneMap& b);

//! gamma-inverse-strongly-monotone operator.
class IsmOperator {
 public:
  //! gamma defaults to 1 / lambda_max((Q + Q^T) / 2) clipped at 0.99; any
  //! value is validated on random pairs.
  static IsmOperator make(MonotoneMap map, std::optional<double> gamma = std::nullopt);

  const MonotoneMap& map() const { return map_; }
  double gamma() const { return gamma_; }
  Index dim() const { return map_.dim(); }
  DualVector operator()(const Vector& x) const { return map_(x); }
  std::optional<ConvexSet> zero_set() const { return map_.zero_set(); }

 private:
  IsmOperator(MonotoneMap map, double gamma) : map_(std::move(map)), gamma_(gamma) {}

  MonotoneMap map_;
  double gamma_;
};

//! Relatively nonexpansive (or quasi-nonexpansive) map with a known fixed set.
class FixedPointMap {
 public:
  enum class Kind { identity, metric_projection, generalized_projection, averaged, resolvent, custom };
  using Function = std::function<Vector(const SpaceSpec&, const Vector&)>;

  static FixedPointMap identity(Index dim);
  //! Euclidean projection P_S; relatively nonexpansive in Hilbert space only.
  static FixedPointMap metric_projection(ConvexSet S);
  //! Generalized projection Pi_S; relatively nonexpansive in every space.
  static FixedPointMap generalized_projection(ConvexSet S);
  //! x -> J^{-1}(t Jx + (1 - t) J inner(x)), 0 < t < 1.
  static FixedPointMap averaged(double t, FixedPointMap inner);
  //! (I + r A)^{-1} for an affine monotone A; Hilbert space only.
  static FixedPointMap resolvent(MonotoneMap A, double r);
  //! User map, flagged as unchecked in traces.
  static FixedPointMap custom(std::string name, Function f, std::optional<ConvexSet> fixed_set);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  bool checked() const { return kind_ != Kind::custom; }
  const std::optional<ConvexSet>& fixed_set() const { return fixed_set_; }

  Vector operator()(const SpaceSpec& space, const Vector& x) const;

  //! Throws ConfigError when the variant is not admissible in `space`.
  void validate(const SpaceSpec& space) const;
  std::string describe() const;

 private:
  FixedPointMap(Kind kind, Index dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  Index dim_;
  std::optional<ConvexSet> set_;
  std::optional<ConvexSet> fixed_set_;
  double t_ = 0.0;
  std::shared_ptr<const FixedPointMap> inner_;
  Matrix resolvent_matrix_;
  Vector resolvent_shift_;
  Function custom_;
  std::string name_;
};

//! Equilibrium bifunction: f(x, x) = 0, f(x, y) + f(y, x) <= 0, convex in y.
class Bifunction {
 public:
  enum class Kind { zero, vi, separable };

  static Bifunction zero(Index dim);
  //! f(x, y) = <G x, y - x>.
  static Bifunction vi(MonotoneMap G);
  //! f(x, y) = h(y) - h(x) with h(z) = 1/2 <z - a, H (z - a)>.
  static Bifunction separable(Matrix H, Vector a);

  Kind kind() const { return kind_; }
  Index dim() const { return G_.dim(); }
  double operator()(const Vector& x, const Vector& y) const;
  //! G for vi-type, grad h for separable, zero otherwise.
  const MonotoneMap& representative() const { return G_; }
  std::string describe() const;

 private:
  Bifunction(Kind kind, MonotoneMap G) : kind_(kind), G_(std::move(G)) {}
  double h(const Vector& z) const;

  Kind kind_;
  MonotoneMap G_;
};

//! Solution set of GEP(f, B) over C when it is exactly describable: the
//! combined map G + B is symmetric PSD and has a zero in C, in which case
//! the solutions are that zero set intersected with C.
std::optional<ConvexSet> gep_solution_set(const Bifunction& f, const MonotoneMap& B, const ConvexSet& C);

//! Natural residual ||x - P_C(x - (G x + B x))|| of GEP(f, B) at x.
double gep_residual(const Bifunction& f, const MonotoneMap& B, const ConvexSet& C, const Vector& x);

//! Margin <x - y, Ax - Ay> - gamma ||Ax - Ay||_*^2 on random pairs; a
//! violation is a margin below -1e-8.
SampleReport check_ism(const IsmOperator& op, const SpaceSpec& space, std::size_t samples,
                       std::uint64_t seed = 1);

//! Margin phi(p, x) - phi(p, Tx) for p drawn from the fixed set and x from
//! a bounded region; a violation is a margin below -1e-8.
SampleReport check_relatively_nonexpansive(const FixedPointMap& T, const SpaceSpec& space,
                                           std::size_t samples, std::uint64_t seed = 1);

//! Sampled test of ||Ax|| <= ||Ax - Ap|| over x in C, with p = witness.  When
//! it holds, VI(A, C) membership reduces to A p = 0.  The witness itself is
//! among the samples.
bool zero_reduction_holds(const IsmOperator& A, const ConvexSet& C, const Vector& witness,
                           std::size_t samples, std::uint64_t seed = 1);

}  // namespace hybrid

#endif  // HYBRID_OPERATORS_HPP
