#ifndef HYBRID_CONVEX_SET_HPP
#define HYBRID_CONVEX_SET_HPP

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hybrid/qp.hpp"
#include "hybrid/space.hpp"

namespace hybrid {

//! { z : <z, a> <= b }.  a = 0 encodes the whole space (then b >= 0).
struct Halfspace {
  DualVector a;
  double b = 0.0;

  bool whole_space() const { return a.size() == 0 || a.isZero(0.0); }
  //! Signed Euclidean distance past the boundary (<= 0 inside).
  double excess(const Vector& z) const;
};

class ConvexSet {
 public:
  struct Whole {};
  struct Box {
    Vector lower;
    Vector upper;
  };
  struct Ball {
    Vector center;
    double radius;
  };
  struct Affine {
    Matrix A;
    Vector b;
  };
  struct Intersection {
    std::vector<ConvexSet> parts;
  };
  using Variant = std::variant<Whole, Box, Ball, Halfspace, Affine, Intersection>;

  static ConvexSet whole_space(Index dim);
  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet cube(Index dim, double lower, double upper);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet halfspace(DualVector a, double b);
  //! { z : A z = b }; consistency of the system is checked.
  static ConvexSet affine(Matrix A, Vector b);
  //! Nonemptiness is certified by `witness` when given, otherwise by
  //! projecting the origin.
  static ConvexSet intersection(std::vector<ConvexSet> parts,
                                std::optional<Vector> witness = std::nullopt);

  Index dim() const { return dim_; }
  const Variant& variant() const { return variant_; }
  const std::optional<Vector>& witness() const { return witness_; }

  //! No ball anywhere in the tree.
  bool polyhedral() const;
  //! Axis-aligned box containing the set, when one is implied by a box or
  //! ball component.
  std::optional<Box> bounding_box() const;
  std::string describe() const;

 private:
  ConvexSet(Index dim, Variant v) : dim_(dim), variant_(std::move(v)) {}

  Index dim_;
  Variant variant_;
  std::optional<Vector> witness_;
};

//! The set flattened into one polyhedron plus a list of balls.
struct SetDecomposition {
  Polyhedron polyhedron;
  std::vector<ConvexSet::Ball> balls;
};

SetDecomposition decompose(const ConvexSet& set);

struct ProjectionOptions {
  //! Target for Euclidean projections (Dykstra change per sweep).
  double euclidean_tol = 1e-10;
  //! Target for the first-order residual of generalized projections.
  double bregman_tol = 1e-8;
  //! 0 selects the routine's default cap.
  int max_iterations = 0;
  //! Starting point for iterative generalized projections.
  std::optional<Vector> warm_start;
};

//! True iff x lies within Euclidean distance tol of the set.
bool contains(const ConvexSet& set, const Vector& x, double tol = 0.0);

//! Euclidean distance from x to the set.
double distance(const ConvexSet& set, const Vector& x, const ProjectionOptions& options = {});

//! Euclidean projection.  Intersections go through the active-set QP when
//! polyhedral and through Dykstra's algorithm otherwise.
Vector metric_project(const ConvexSet& set, const Vector& x, const ProjectionOptions& options = {});
Vector metric_project(const SetDecomposition& set, const Vector& x,
                      const ProjectionOptions& options = {});

//! Generalized projection: the minimizer of phi(., y) over the set.
Vector gen_project(const SpaceSpec& space, const ConvexSet& set, const Vector& y,
                   const ProjectionOptions& options = {});
Vector gen_project(const SpaceSpec& space, const SetDecomposition& set, const Vector& y,
                   const ProjectionOptions& options = {});

//! Generalized projection of x0 onto base intersected with every cut.
Vector project_onto_shrunk_set(const SpaceSpec& space, const ConvexSet& base,
                               std::span<const Halfspace> cuts, const Vector& x0,
                               const ProjectionOptions& options = {});

//! Generalized projection of a fixed anchor onto base intersected with a
//! growing list of cuts.  Each solve keeps only the cuts that were active at
//! the previous answer plus the newest one, then adds back any stored cut the
//! trial point violates and solves again.  The result is the projection onto
//! the full intersection while the subproblems stay small.
class ShrinkingProjector {
 public:
  ShrinkingProjector(SpaceSpec space, ConvexSet base, Vector anchor);

  const SpaceSpec& space() const { return space_; }
  const Vector& anchor() const { return anchor_; }
  //! Whole-space cuts are ignored.
  void add_cut(const Halfspace& cut);
  std::size_t num_cuts() const { return offsets_.size(); }
  //! Largest Euclidean excess of z over the stored cuts (0 with no cuts).
  double max_cut_excess(const Vector& z) const;
  Vector project(const ProjectionOptions& options = {});

 private:
  SpaceSpec space_;
  SetDecomposition base_;
  Vector anchor_;
  std::vector<double> normals_;  // unit normals, row-major
  std::vector<double> offsets_;
  std::vector<std::size_t> working_;
};

//! { z : phi(z, w) <= phi(z, x) } as the halfspace 2<z, Jx - Jw> <= ||x||^2 - ||w||^2.
Halfspace halfspace_from_phi_cut(const SpaceSpec& space, const Vector& w, const Vector& x);

}  // namespace hybrid

#endif  // HYBRID_CONVEX_SET_HPP
