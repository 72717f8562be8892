#ifndef HYBRID_SMOOTH_MINIMIZE_HPP
#define HYBRID_SMOOTH_MINIMIZE_HPP

#include <functional>

#include "hybrid/qp.hpp"

namespace hybrid {

//! Convex C^1 objective.  The Hessian callback may be left empty, in which
//! case only the gradient method applies.
struct SmoothObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

struct MinimizeOptions {
  //! Stop when the natural residual ||z - P(z - grad)|| <= tol * (1 + ||z||).
  double tol = 1e-10;
  int max_iterations = 200;
};

struct MinimizeResult {
  Vector z;
  int iterations = 0;
  double residual = 0.0;
};

using Projector = std::function<Vector(const Vector&)>;

//! ||z - P(z - g)||.
double natural_residual(const Projector& project, const Vector& z, const Vector& g);

//! Projected Newton method over a polyhedron.  Each step solves the
//! quadratic model under the linear constraints; Armijo backtracking keeps
//! the iteration monotone.  `start` need not be feasible.
MinimizeResult projected_newton(const SmoothObjective& f, const Polyhedron& poly,
                                const Vector& start, const MinimizeOptions& options = {});

//! Projected gradient with Barzilai-Borwein steps and backtracking, for sets
//! known only through a Euclidean projector.
MinimizeResult projected_gradient(const SmoothObjective& f, const Projector& project,
                                  const Vector& start, const MinimizeOptions& options = {});

}  // namespace hybrid

#endif  // HYBRID_SMOOTH_MINIMIZE_HPP
