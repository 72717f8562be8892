#include "hybrid/convex_set.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "hybrid/smooth_minimize.hpp"

namespace hybrid {

namespace {

constexpr int kDykstraCap = 100000;
constexpr int kNewtonCap = 200;
constexpr int kGradientCap = 20000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw ConfigError(std::string(what) + " must have finite entries");
}

Vector project_ball(const ConvexSet::Ball& ball, const Vector& x) {
  const Vector d = x - ball.center;
  const double nrm = d.norm();
  if (nrm <= ball.radius) return x;
  return ball.center + (ball.radius / nrm) * d;
}

double ball_excess(const ConvexSet::Ball& ball, const Vector& x) {
  return (x - ball.center).norm() - ball.radius;
}

double max_excess(const SetDecomposition& set, const Vector& x) {
  double worst = set.polyhedron.max_violation(x);
  for (const auto& b : set.balls) worst = std::max(worst, ball_excess(b, x));
  return worst;
}

void flatten(const ConvexSet& set, SetDecomposition& out) {
  std::visit(Overloaded{
                 [](const ConvexSet::Whole&) {},
                 [&](const ConvexSet::Box& b) {
                   const Index n = b.lower.size();
                   out.polyhedron.add_inequalities(Matrix::Identity(n, n), b.upper);
                   out.polyhedron.add_inequalities(-Matrix::Identity(n, n), -b.lower);
                 },
                 [&](const ConvexSet::Ball& b) { out.balls.push_back(b); },
                 [&](const Halfspace& h) {
                   if (!h.whole_space()) out.polyhedron.add_inequality(h.a, h.b);
                 },
                 [&](const ConvexSet::Affine& a) { out.polyhedron.add_equalities(a.A, a.b); },
                 [&](const ConvexSet::Intersection& i) {
                   for (const auto& part : i.parts) flatten(part, out);
                 },
             },
             set.variant());
}

Vector dykstra(const SetDecomposition& set, const Vector& x, const ProjectionOptions& options) {
  std::vector<std::function<Vector(const Vector&)>> blocks;
  if (!set.polyhedron.unconstrained()) {
    blocks.emplace_back([&](const Vector& v) { return project_onto_polyhedron(set.polyhedron, v).x; });
  }
  for (const auto& ball : set.balls) {
    blocks.emplace_back([&ball](const Vector& v) { return project_ball(ball, v); });
  }
  std::vector<Vector> increments(blocks.size(), Vector::Zero(x.size()));
  Vector z = x;
  const int cap = options.max_iterations > 0 ? options.max_iterations : kDykstraCap;
  for (int sweep = 0; sweep < cap; ++sweep) {
    const Vector previous = z;
    // z can repeat over a sweep while the increments still move, so both must settle.
    double increment_change = 0.0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Vector y = z + increments[i];
      z = blocks[i](y);
      const Vector next = y - z;
      increment_change = std::max(increment_change, (next - increments[i]).norm());
      increments[i] = next;
    }
    const double scale = 1.0 + z.norm();
    if ((z - previous).norm() <= options.euclidean_tol * scale &&
        increment_change <= options.euclidean_tol * scale &&
        max_excess(set, z) <= options.euclidean_tol * scale) {
      return z;
    }
  }
  if (max_excess(set, z) > 1e-6 * (1.0 + z.norm())) {
    throw SolverError(SolverFailure::infeasible, "Dykstra projection stalled away from the set; intersection looks empty");
  }
  throw SolverError(SolverFailure::iteration_cap, "Dykstra projection exceeded iteration cap");
}

// Objective 1/2 ||z||^2 - <u, z> + nu/2 ||z - c||^2 (constant dropped).
SmoothObjective bregman_objective(const SpaceSpec& space, const DualVector& u, double nu,
                                  const Vector& c) {
  SmoothObjective f;
  f.value = [&space, u, nu, c](const Vector& z) {
    const double nz = norm(space, z);
    return 0.5 * nz * nz - u.dot(z) + 0.5 * nu * (z - c).squaredNorm();
  };
  f.gradient = [&space, u, nu, c](const Vector& z) {
    return Vector(duality_map(space, z) - u + nu * (z - c));
  };
  f.hessian = [&space, nu](const Vector& z) {
    Matrix h = duality_map_jacobian(space, z);
    h.diagonal().array() += nu;
    return h;
  };
  return f;
}

Vector newton_over_polyhedron(const SpaceSpec& space, const Polyhedron& poly, const DualVector& u,
                              double nu, const Vector& c, const Vector& start) {
  MinimizeOptions opts;
  opts.tol = 1e-13;
  opts.max_iterations = kNewtonCap;
  return projected_newton(bregman_objective(space, u, nu, c), poly, start, opts).z;
}

// Generalized projection onto polyhedron intersected with at most one ball.
// The ball constraint is dualized: z(nu) minimizes the Lagrangian over the
// polyhedron and ||z(nu) - c|| decreases in nu, so nu is found by bisection.
Vector gen_project_newton(const SpaceSpec& space, const SetDecomposition& set, const Vector& y,
                          const Vector& start) {
  const DualVector u = duality_map(space, y);
  const Vector zero = Vector::Zero(y.size());
  Vector z = newton_over_polyhedron(space, set.polyhedron, u, 0.0, zero, start);
  if (set.balls.empty()) return z;

  const auto& ball = set.balls.front();
  if (ball_excess(ball, z) <= 0.0) return z;
  double lo = 0.0;
  double hi = 1.0;
  Vector z_hi = newton_over_polyhedron(space, set.polyhedron, u, hi, ball.center, z);
  while (ball_excess(ball, z_hi) > 0.0) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e15) {
      throw SolverError(SolverFailure::infeasible, "ball does not meet the polyhedral constraints");
    }
    z_hi = newton_over_polyhedron(space, set.polyhedron, u, hi, ball.center, z_hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vector z_mid = newton_over_polyhedron(space, set.polyhedron, u, mid, ball.center, z_hi);
    if (ball_excess(ball, z_mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
      z_hi = z_mid;
    }
  }
  return z_hi;
}

}  // namespace

double Halfspace::excess(const Vector& z) const {
  if (whole_space()) return -std::numeric_limits<double>::infinity();
  return (a.dot(z) - b) / a.norm();
}

ConvexSet ConvexSet::whole_space(Index dim) {
  if (dim < 1) throw ConfigError("set dimension must be at least 1");
  return ConvexSet(dim, Whole{});
}

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() < 1 || lower.size() != upper.size()) {
    throw DimensionError("box bounds must be nonempty and of equal length");
  }
  require_finite(lower, "box lower bound");
  require_finite(upper, "box upper bound");
  if ((lower.array() > upper.array()).any()) throw ConfigError("box is empty: lower > upper");
  const Index n = lower.size();
  return ConvexSet(n, Box{std::move(lower), std::move(upper)});
}

ConvexSet ConvexSet::cube(Index dim, double lower, double upper) {
  return box(Vector::Constant(dim, lower), Vector::Constant(dim, upper));
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (center.size() < 1) throw DimensionError("ball center must be nonempty");
  require_finite(center, "ball center");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be finite and >= 0");
  const Index n = center.size();
  return ConvexSet(n, Ball{std::move(center), radius});
}

ConvexSet ConvexSet::halfspace(DualVector a, double b) {
  if (a.size() < 1) throw DimensionError("halfspace normal must be nonempty");
  require_finite(a, "halfspace normal");
  if (!std::isfinite(b)) throw ConfigError("halfspace offset must be finite");
  Halfspace h{std::move(a), b};
  if (h.whole_space() && b < 0.0) throw ConfigError("halfspace with zero normal and b < 0 is empty");
  const Index n = h.a.size();
  return ConvexSet(n, std::move(h));
}

ConvexSet ConvexSet::affine(Matrix A, Vector b) {
  if (A.cols() < 1 || A.rows() != b.size()) throw DimensionError("affine set: A rows must match b");
  if (!A.allFinite() || !b.allFinite()) throw ConfigError("affine set must have finite data");
  const Vector x = A.colPivHouseholderQr().solve(b);
  if ((A * x - b).norm() > 1e-10 * (1.0 + b.norm())) throw ConfigError("affine set is empty: A z = b is inconsistent");
  const Index n = A.cols();
  return ConvexSet(n, Affine{std::move(A), std::move(b)});
}

ConvexSet ConvexSet::intersection(std::vector<ConvexSet> parts, std::optional<Vector> witness) {
  if (parts.empty()) throw ConfigError("intersection needs at least one part");
  const Index n = parts.front().dim();
  for (const auto& p : parts) {
    if (p.dim() != n) throw DimensionError("intersection parts have different dimensions");
  }
  ConvexSet out(n, Intersection{std::move(parts)});
  if (witness) {
    if (witness->size() != n) throw DimensionError("intersection witness has wrong dimension");
    if (!contains(out, *witness, 1e-8 * (1.0 + witness->norm()))) {
      throw ConfigError("intersection witness does not lie in every part");
    }
    out.witness_ = std::move(witness);
  } else {
    try {
      out.witness_ = metric_project(out, Vector::Zero(n));
    } catch (const SolverError&) {
      throw ConfigError("intersection is empty");
    }
  }
  return out;
}

bool ConvexSet::polyhedral() const {
  return std::visit(Overloaded{
                        [](const Ball&) { return false; },
                        [](const Intersection& i) {
                          for (const auto& p : i.parts) {
                            if (!p.polyhedral()) return false;
                          }
                          return true;
                        },
                        [](const auto&) { return true; },
                    },
                    variant_);
}

std::optional<ConvexSet::Box> ConvexSet::bounding_box() const {
  return std::visit(Overloaded{
                        [](const Box& b) -> std::optional<Box> { return b; },
                        [](const Ball& b) -> std::optional<Box> {
                          const Vector r = Vector::Constant(b.center.size(), b.radius);
                          return Box{b.center - r, b.center + r};
                        },
                        [](const Intersection& i) -> std::optional<Box> {
                          std::optional<Box> out;
                          for (const auto& p : i.parts) {
                            const auto bb = p.bounding_box();
                            if (!bb) continue;
                            if (!out) {
                              out = bb;
                            } else {
                              out->lower = out->lower.cwiseMax(bb->lower);
                              out->upper = out->upper.cwiseMin(bb->upper);
                            }
                          }
                          return out;
                        },
                        [](const auto&) -> std::optional<Box> { return std::nullopt; },
                    },
                    variant_);
}

std::string ConvexSet::describe() const {
  std::ostringstream os;
  const Eigen::IOFormat fmt(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "(", ")");
  std::visit(Overloaded{
                 [&](const Whole&) { os << "R^" << dim_; },
                 [&](const Box& b) {
                   os << "box[" << b.lower.transpose().format(fmt) << ", " << b.upper.transpose().format(fmt) << "]";
                 },
                 [&](const Ball& b) { os << "ball(" << b.center.transpose().format(fmt) << ", " << b.radius << ")"; },
                 [&](const Halfspace& h) { os << "halfspace(" << h.a.transpose().format(fmt) << " <= " << h.b << ")"; },
                 [&](const Affine& a) { os << "affine(" << a.A.rows() << " equations)"; },
                 [&](const Intersection& i) {
                   os << "intersection{";
                   for (std::size_t k = 0; k < i.parts.size(); ++k) os << (k ? "; " : "") << i.parts[k].describe();
                   os << "}";
                 },
             },
             variant_);
  return os.str();
}

SetDecomposition decompose(const ConvexSet& set) {
  SetDecomposition out{Polyhedron(set.dim()), {}};
  flatten(set, out);
  return out;
}

double distance(const ConvexSet& set, const Vector& x, const ProjectionOptions& options) {
  if (x.size() != set.dim()) throw DimensionError("distance: point has wrong dimension");
  return std::visit(Overloaded{
                        [](const ConvexSet::Whole&) { return 0.0; },
                        [&](const ConvexSet::Box& b) { return (x - x.cwiseMax(b.lower).cwiseMin(b.upper)).norm(); },
                        [&](const ConvexSet::Ball& b) { return std::max(0.0, ball_excess(b, x)); },
                        [&](const Halfspace& h) { return std::max(0.0, h.excess(x)); },
                        [&](const auto&) { return (x - metric_project(set, x, options)).norm(); },
                    },
                    set.variant());
}

bool contains(const ConvexSet& set, const Vector& x, double tol) {
  if (x.size() != set.dim()) throw DimensionError("contains: point has wrong dimension");
  if (const auto* inter = std::get_if<ConvexSet::Intersection>(&set.variant())) {
    bool exact = true;
    for (const auto& part : inter->parts) {
      const double d = distance(part, x);
      if (d > tol) return false;
      exact = exact && d == 0.0;
    }
    if (exact) return true;
  }
  return distance(set, x) <= tol;
}

Vector metric_project(const SetDecomposition& set, const Vector& x, const ProjectionOptions& options) {
  if (x.size() != set.polyhedron.dim()) throw DimensionError("metric_project: point has wrong dimension");
  if (set.balls.empty()) {
    if (set.polyhedron.unconstrained()) return x;
    return project_onto_polyhedron(set.polyhedron, x).x;
  }
  if (set.polyhedron.unconstrained() && set.balls.size() == 1) return project_ball(set.balls.front(), x);
  if (max_excess(set, x) <= 0.0) return x;
  return dykstra(set, x, options);
}

Vector metric_project(const ConvexSet& set, const Vector& x, const ProjectionOptions& options) {
  if (x.size() != set.dim()) throw DimensionError("metric_project: point has wrong dimension");
  return std::visit(Overloaded{
                        [&](const ConvexSet::Whole&) -> Vector { return x; },
                        [&](const ConvexSet::Box& b) -> Vector { return x.cwiseMax(b.lower).cwiseMin(b.upper); },
                        [&](const ConvexSet::Ball& b) -> Vector { return project_ball(b, x); },
                        [&](const Halfspace& h) -> Vector {
                          const double e = h.excess(x);
                          if (e <= 0.0) return x;
                          return x - e * h.a.normalized();
                        },
                        [&](const auto&) -> Vector { return metric_project(decompose(set), x, options); },
                    },
                    set.variant());
}

Vector gen_project(const SpaceSpec& space, const SetDecomposition& set, const Vector& y,
                   const ProjectionOptions& options) {
  space.check_dim(y.size(), "gen_project");
  if (space.is_hilbert()) return metric_project(set, y, options);
  if (max_excess(set, y) <= 0.0) return y;

  const Vector start = options.warm_start ? *options.warm_start : y;
  Vector z;
  if (set.balls.size() <= 1) {
    z = gen_project_newton(space, set, y, start);
  } else {
    const Projector project = [&](const Vector& v) { return metric_project(set, v, options); };
    MinimizeOptions opts;
    opts.tol = 1e-2 * options.bregman_tol;
    opts.max_iterations = options.max_iterations > 0 ? options.max_iterations : kGradientCap;
    const auto res = projected_gradient(
        bregman_objective(space, duality_map(space, y), 0.0, Vector::Zero(y.size())), project, start, opts);
    if (res.residual > options.bregman_tol * (1.0 + res.z.norm())) {
      throw SolverError(SolverFailure::iteration_cap, "generalized projection did not reach tolerance");
    }
    z = res.z;
  }
  return z;
}

Vector gen_project(const SpaceSpec& space, const ConvexSet& set, const Vector& y,
                   const ProjectionOptions& options) {
  space.check_dim(set.dim(), "gen_project");
  if (space.is_hilbert()) return metric_project(set, y, options);
  return gen_project(space, decompose(set), y, options);
}

ShrinkingProjector::ShrinkingProjector(SpaceSpec space, ConvexSet base, Vector anchor)
    : space_(std::move(space)), base_(decompose(base)), anchor_(std::move(anchor)) {
  space_.check_dim(base.dim(), "ShrinkingProjector");
  space_.check_dim(anchor_.size(), "ShrinkingProjector");
}

void ShrinkingProjector::add_cut(const Halfspace& cut) {
  if (cut.whole_space()) {
    if (cut.b < 0.0) throw SolverError(SolverFailure::infeasible, "cut with zero normal and negative offset");
    return;
  }
  space_.check_dim(cut.a.size(), "ShrinkingProjector::add_cut");
  const double nrm = cut.a.norm();
  for (Index i = 0; i < cut.a.size(); ++i) normals_.push_back(cut.a[i] / nrm);
  offsets_.push_back(cut.b / nrm);
  working_.push_back(offsets_.size() - 1);
}

double ShrinkingProjector::max_cut_excess(const Vector& z) const {
  if (offsets_.empty()) return 0.0;
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> N(normals_.data(), static_cast<Index>(offsets_.size()), anchor_.size());
  const Eigen::Map<const Vector> b(offsets_.data(), static_cast<Index>(offsets_.size()));
  return std::max(0.0, (N * z - b).maxCoeff());
}

Vector ShrinkingProjector::project(const ProjectionOptions& options) {
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index n = anchor_.size();
  const auto count = static_cast<Index>(offsets_.size());
  const Eigen::Map<const RowMatrix> N(normals_.data(), count, n);
  const Eigen::Map<const Vector> b(offsets_.data(), count);
  std::vector<char> in_working(offsets_.size(), 0);
  for (std::size_t k : working_) in_working[k] = 1;

  while (true) {
    SetDecomposition set = base_;
    Matrix G(static_cast<Index>(working_.size()), n);
    Vector h(static_cast<Index>(working_.size()));
    for (std::size_t i = 0; i < working_.size(); ++i) {
      G.row(static_cast<Index>(i)) = N.row(static_cast<Index>(working_[i]));
      h(static_cast<Index>(i)) = b(static_cast<Index>(working_[i]));
    }
    set.polyhedron.add_inequalities(G, h);
    const Vector z = gen_project(space_, set, anchor_, options);
    if (count == 0) return z;

    const Vector excess = N * z - b;
    const double scale = 1.0 + z.norm();
    bool added = false;
    for (Index k = 0; k < count; ++k) {
      if (!in_working[static_cast<std::size_t>(k)] && excess(k) > 1e-11 * scale) {
        working_.push_back(static_cast<std::size_t>(k));
        in_working[static_cast<std::size_t>(k)] = 1;
        added = true;
      }
    }
    if (!added) {
      std::erase_if(working_, [&](std::size_t k) { return excess(static_cast<Index>(k)) < -1e-9 * scale; });
      return z;
    }
  }
}

Vector project_onto_shrunk_set(const SpaceSpec& space, const ConvexSet& base,
                               std::span<const Halfspace> cuts, const Vector& x0,
                               const ProjectionOptions& options) {
  ShrinkingProjector projector(space, base, x0);
  for (const auto& cut : cuts) projector.add_cut(cut);
  return projector.project(options);
}

Halfspace halfspace_from_phi_cut(const SpaceSpec& space, const Vector& w, const Vector& x) {
  space.check_dim(w.size(), "halfspace_from_phi_cut");
  space.check_dim(x.size(), "halfspace_from_phi_cut");
  const DualVector jx = duality_map(space, x);
  const DualVector diff = jx - duality_map(space, w);
  if (diff.norm() <= 1e-15 * (1.0 + jx.norm())) return Halfspace{Vector::Zero(x.size()), 0.0};
  // ||x||^2 - ||w||^2 = 2<x, Jx - Jw> - phi(x, w); this form keeps the
  // offset accurate when w is close to x.
  Halfspace h{2.0 * diff, 0.0};
  h.b = h.a.dot(x) - lyapunov_phi(space, x, w);
  return h;
}

}  // namespace hybrid
