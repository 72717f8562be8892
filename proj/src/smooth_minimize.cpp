#include "hybrid/smooth_minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybrid {

namespace {

// Slack for comparing objective values that agree to roundoff.
double value_slack(double f) { return 1e-14 * (1.0 + std::abs(f)); }

// Minimizes t -> f(z + t d) over [0, 1] by safeguarded regula falsi on the
// directional derivative.  Objective values are not compared, so the search
// stays reliable when the decrease is below roundoff in f.
double line_search(const SmoothObjective& f, const Vector& z, const Vector& d, double slope) {
  auto derivative = [&](double t) { return f.gradient(z + t * d).dot(d); };
  double d1 = derivative(1.0);
  if (d1 <= 0.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double dlo = slope;
  double dhi = d1;
  double t = 1.0;
  for (int it = 0; it < 60; ++it) {
    t = lo + (hi - lo) * dlo / (dlo - dhi);
    // Keep the trial away from the bracket ends.
    const double width = hi - lo;
    t = std::clamp(t, lo + 0.01 * width, hi - 0.01 * width);
    const double dt = derivative(t);
    if (std::abs(dt) <= 1e-3 * std::abs(slope)) return t;
    if (dt < 0.0) {
      lo = t;
      dlo = dt;
    } else {
      hi = t;
      dhi = dt;
    }
    if (hi - lo <= 1e-14) break;
  }
  return lo > 0.0 ? lo : t;
}

}  // namespace

double natural_residual(const Projector& project, const Vector& z, const Vector& g) {
  return (z - project(z - g)).norm();
}

MinimizeResult projected_newton(const SmoothObjective& f, const Polyhedron& poly,
                                const Vector& start, const MinimizeOptions& options) {
  const Projector project = [&](const Vector& v) { return project_onto_polyhedron(poly, v).x; };
  MinimizeResult out;
  out.z = poly.unconstrained() ? start : project(start);
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    const Vector g = f.gradient(out.z);
    out.residual = poly.unconstrained() ? g.norm() : natural_residual(project, out.z, g);
    const double scale = 1.0 + out.z.norm();
    if (out.residual <= options.tol * scale) return out;

    const Vector d = solve_scaled_step(poly, out.z, g, f.hessian(out.z));
    const double slope = g.dot(d);
    if (d.norm() <= 1e-15 * scale) break;

    // A nonnegative slope here is roundoff from coordinates pinned at a
    // bound; the full step is then the better guess.
    const double t = slope < 0.0 ? line_search(f, out.z, d, slope) : 1.0;
    if (t <= 0.0) break;
    out.z += t * d;
  }
  const Vector g = f.gradient(out.z);
  out.residual = poly.unconstrained() ? g.norm() : natural_residual(project, out.z, g);
  return out;
}

MinimizeResult projected_gradient(const SmoothObjective& f, const Projector& project,
                                  const Vector& start, const MinimizeOptions& options) {
  MinimizeResult out;
  out.z = project(start);
  Vector g = f.gradient(out.z);
  double step = 1.0;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    out.residual = natural_residual(project, out.z, g);
    if (out.residual <= options.tol * (1.0 + out.z.norm())) return out;

    const double f0 = f.value(out.z);
    Vector next;
    while (true) {
      next = project(out.z - step * g);
      const Vector dz = next - out.z;
      if (f.value(next) <= f0 + g.dot(dz) + dz.squaredNorm() / (2.0 * step) + value_slack(f0)) break;
      step *= 0.5;
      if (step < 1e-16) return out;
    }
    const Vector g_next = f.gradient(next);
    const Vector dz = next - out.z;
    const double curvature = dz.dot(g_next - g);
    step = curvature > 0.0 ? dz.squaredNorm() / curvature : 2.0 * step;
    out.z = std::move(next);
    g = g_next;
  }
  out.residual = natural_residual(project, out.z, g);
  return out;
}

}  // namespace hybrid
