#ifndef HYBRID_RESOLVENT_HPP
#define HYBRID_RESOLVENT_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "hybrid/operators.hpp"

namespace hybrid {

//! One regularized equilibrium subproblem: find z in C with
//! f(z, y) + <B x, y - z> + (1/r) <y - z, Jz - Jx> >= 0 for all y in C.
struct ResolventProblem {
  SpaceSpec space;
  ConvexSet C;
  Bifunction f;
  MonotoneMap B;
  double r;
  Vector x;
};

enum class ResolventMethod { potential_newton, projection_fixed_point, forward_backward_forward };

const char* to_string(ResolventMethod m);

struct ResolventOptions {
  //! Target for the natural residual ||z - P_C(z - M(z))||, scaled by max(1, ||z||).
  double tol = 1e-10;
  int max_iterations = 20000;
  std::optional<Vector> initial;
  //! When set, the defining inequality is certified on these points after
  //! the solve and a SolverError is raised if it fails.
  std::shared_ptr<const std::vector<Vector>> certificate_points;
};

struct ResolventSolution {
  Vector z;
  int iterations = 0;
  double residual = 0.0;
  ResolventMethod method = ResolventMethod::potential_newton;
  //! Worst normalized margin on the certificate points (0 when not certified).
  double certificate_margin = 0.0;
};

//! The operator of the equivalent variational inequality,
//! M(z) = G z + B x + (1/r)(Jz - Jx).
DualVector resolvent_operator(const ResolventProblem& prob, const Vector& z);

//! Value of the defining inequality at (z, y).
double resolvent_margin(const ResolventProblem& prob, const Vector& z, const Vector& y);

//! Computes T_r x.  Symmetric G over a polyhedral C is solved as a convex
//! minimization by projected Newton; otherwise the projection fixed-point
//! iteration z <- P_C(z - s M(z)) is used, halving s when it stops
//! contracting and falling back to forward-backward-forward splitting.
ResolventSolution solve_resolvent(const ResolventProblem& prob, const ResolventOptions& options = {});

//! Points used to approximate "for all y in C": box vertices plus `count`
//! samples, drawn deterministically from `seed`.
std::shared_ptr<const std::vector<Vector>> resolvent_certificate_points(const ConvexSet& C, std::size_t count,
                                                                        std::uint64_t seed = 7);

//! Worst margin of the defining inequality over `points`, each margin
//! divided by max(1, ||y - z||).
SampleReport certify_resolvent(const ResolventProblem& prob, const Vector& z, const std::vector<Vector>& points,
                               double tol);

//! <Tx - Ty, Jx - Jy> - <Tx - Ty, JTx - JTy> over random anchor pairs.  The
//! anchor stored in `prob` is ignored.
SampleReport check_firm_nonexpansiveness(const ResolventProblem& prob, std::size_t pairs, std::uint64_t seed = 1);

//! phi(q, x) - phi(q, T_r x) - phi(T_r x, x) over random anchors, for q a
//! fixed point of T_r.
SampleReport check_resolvent_phi_inequality(const ResolventProblem& prob, const Vector& q, std::size_t samples,
                                            std::uint64_t seed = 1);

}  // namespace hybrid

#endif  // HYBRID_RESOLVENT_HPP
