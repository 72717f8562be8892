#ifndef HYBRID_QP_HPP
#define HYBRID_QP_HPP

#include <vector>

#include "hybrid/space.hpp"

namespace hybrid {

//! { z : G z <= h, E z = e } in R^dim.
class Polyhedron {
 public:
  explicit Polyhedron(Index dim) : dim_(dim), G_(0, dim), h_(0), E_(0, dim), e_(0) {}

  Index dim() const { return dim_; }
  Index num_inequalities() const { return G_.rows(); }
  Index num_equalities() const { return E_.rows(); }
  bool unconstrained() const { return G_.rows() == 0 && E_.rows() == 0; }

  void add_inequality(const Eigen::Ref<const Vector>& a, double b);
  void add_equality(const Eigen::Ref<const Vector>& a, double b);
  void add_inequalities(const Matrix& G, const Vector& h);
  void add_equalities(const Matrix& E, const Vector& e);
  void append(const Polyhedron& other);

  const Matrix& G() const { return G_; }
  const Vector& h() const { return h_; }
  const Matrix& E() const { return E_; }
  const Vector& e() const { return e_; }

  //! Largest constraint violation, each row measured as a Euclidean distance.
  double max_violation(const Vector& z) const;

 private:
  Index dim_;
  Matrix G_;
  Vector h_;
  Matrix E_;
  Vector e_;
};

struct QpOptions {
  double feasibility_tol = 1e-12;
  //! NNLS step cap; 0 selects 10 * (rows + dim) + 100.
  int max_iterations = 0;
};

struct QpSolution {
  Vector x;
  //! Multipliers for the inequality rows as given (not normalized); zero for
  //! inactive rows.  x - x0 = -G^T mu + E^T nu.
  Vector mu;
  Vector nu;
  int iterations = 0;
};

//! Euclidean projection of x0 onto the polyhedron, i.e. the QP
//! min 1/2 ||x - x0||^2 subject to the rows of `poly`.  Equalities are
//! eliminated through an orthonormal kernel basis; the remaining least
//! distance problem is solved by Lawson-Hanson NNLS.
//! Throws SolverError(infeasible) when the constraints admit no point.
QpSolution project_onto_polyhedron(const Polyhedron& poly, const Vector& x0,
                                   const QpOptions& options = {});

//! min g^T d + 1/2 d^T H d subject to z + d in poly, with H symmetric
//! positive definite.  Reduced to a projection through the Cholesky factor.
Vector solve_scaled_step(const Polyhedron& poly, const Vector& z, const Vector& g,
                         const Matrix& H, const QpOptions& options = {});

}  // namespace hybrid

#endif  // HYBRID_QP_HPP
