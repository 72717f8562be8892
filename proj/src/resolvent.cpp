#include "hybrid/resolvent.hpp"

#include <cmath>
#include <limits>

#include "hybrid/sampling.hpp"
#include "hybrid/smooth_minimize.hpp"

namespace hybrid {

namespace {

constexpr int kMaxHalvings = 3;
constexpr double kTsengTheta = 0.9;

void validate(const ResolventProblem& prob) {
  prob.space.check_dim(prob.C.dim(), "resolvent set");
  prob.space.check_dim(prob.f.dim(), "resolvent bifunction");
  prob.space.check_dim(prob.B.dim(), "resolvent perturbation");
  prob.space.check_dim(prob.x.size(), "resolvent anchor");
  if (!(prob.r > 0.0) || !std::isfinite(prob.r)) throw ConfigError("resolvent parameter r must be positive");
}

// Everything about M that does not depend on z.
struct ResolventData {
  const ResolventProblem& prob;
  DualVector constant;  // B x - Jx / r + q_G

  explicit ResolventData(const ResolventProblem& p)
      : prob(p),
        constant(p.B(p.x) - duality_map(p.space, p.x) / p.r + p.f.representative().q()) {}

  DualVector M(const Vector& z) const {
    return prob.f.representative().Q() * z + constant + duality_map(prob.space, z) / prob.r;
  }
};

double scale_of(const Vector& z) { return std::max(1.0, z.norm()); }

ResolventSolution potential_newton(const ResolventData& data, const Vector& start, double tol) {
  const auto& prob = data.prob;
  const Matrix& Q = prob.f.representative().Q();
  SmoothObjective phi;
  phi.value = [&](const Vector& z) {
    const double nz = norm(prob.space, z);
    return 0.5 * z.dot(Q * z) + data.constant.dot(z) + 0.5 * nz * nz / prob.r;
  };
  phi.gradient = [&](const Vector& z) { return data.M(z); };
  phi.hessian = [&](const Vector& z) {
    Matrix h = duality_map_jacobian(prob.space, z) / prob.r;
    h += 0.5 * (Q + Q.transpose());
    return h;
  };
  MinimizeOptions opts;
  opts.tol = 0.1 * tol;
  const SetDecomposition set = decompose(prob.C);
  const MinimizeResult res = projected_newton(phi, set.polyhedron, start, opts);
  ResolventSolution out;
  out.z = res.z;
  out.iterations = res.iterations;
  out.method = ResolventMethod::potential_newton;
  return out;
}

ResolventSolution splitting(const ResolventData& data, const Vector& start, const ResolventOptions& options) {
  const auto& prob = data.prob;
  auto project = [&](const Vector& v) { return metric_project(prob.C, v); };
  const double lg = prob.f.representative().lipschitz();
  // For Hilbert space M is (1/r)-strongly monotone and (L_G + 1/r)-Lipschitz;
  // this is half the largest step for which the iteration contracts.
  double s = prob.r / ((1.0 + prob.r * lg) * (1.0 + prob.r * lg));

  ResolventSolution out;
  out.method = ResolventMethod::projection_fixed_point;
  Vector z = project(start);
  double previous_step = std::numeric_limits<double>::infinity();
  int halvings = 0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Vector next = project(z - s * data.M(z));
    const double step = (next - z).norm();
    // ||z - P(z - M z)|| <= ||z - P(z - s M z)|| / min(s, 1).
    if (step / std::min(s, 1.0) <= options.tol * scale_of(z)) break;
    if (step > 0.9999 * previous_step) {
      if (++halvings > kMaxHalvings) {
        out.method = ResolventMethod::forward_backward_forward;
        break;
      }
      s *= 0.5;
      previous_step = std::numeric_limits<double>::infinity();
      continue;
    }
    previous_step = step;
    z = next;
  }

  if (out.method == ResolventMethod::forward_backward_forward) {
    for (; it < options.max_iterations; ++it) {
      const DualVector mz = data.M(z);
      Vector y;
      DualVector my;
      while (true) {
        y = project(z - s * mz);
        my = data.M(y);
        if (s * (my - mz).norm() <= kTsengTheta * (y - z).norm()) break;
        s *= 0.5;
        if (s < 1e-16) throw SolverError(SolverFailure::non_contracting, "resolvent step size collapsed");
      }
      if ((y - z).norm() / std::min(s, 1.0) <= options.tol * scale_of(z)) break;
      z = project(y - s * (my - mz));
      s *= 1.5;
    }
  }
  if (it >= options.max_iterations) {
    throw SolverError(SolverFailure::iteration_cap, "resolvent solver exceeded iteration cap");
  }
  out.z = std::move(z);
  out.iterations = it;
  return out;
}

}  // namespace

const char* to_string(ResolventMethod m) {
  switch (m) {
    case ResolventMethod::potential_newton: return "potential-newton";
    case ResolventMethod::projection_fixed_point: return "projection-fixed-point";
    case ResolventMethod::forward_backward_forward: return "forward-backward-forward";
  }
  return "unknown";
}

DualVector resolvent_operator(const ResolventProblem& prob, const Vector& z) {
  return ResolventData(prob).M(z);
}

double resolvent_margin(const ResolventProblem& prob, const Vector& z, const Vector& y) {
  const Vector d = y - z;
  return prob.f(z, y) + prob.B(prob.x).dot(d) +
         d.dot(duality_map(prob.space, z) - duality_map(prob.space, prob.x)) / prob.r;
}

ResolventSolution solve_resolvent(const ResolventProblem& prob, const ResolventOptions& options) {
  validate(prob);
  const ResolventData data(prob);
  const Vector start = options.initial ? *options.initial : metric_project(prob.C, prob.x);

  ResolventSolution out;
  bool done = false;
  if (prob.f.representative().symmetric() && prob.C.polyhedral()) {
    out = potential_newton(data, start, options.tol);
    done = (out.z - metric_project(prob.C, out.z - data.M(out.z))).norm() <= options.tol * scale_of(out.z);
  }
  if (!done) {
    const int spent = out.iterations;
    out = splitting(data, out.z.size() ? out.z : start, options);
    out.iterations += spent;
  }
  out.residual = (out.z - metric_project(prob.C, out.z - data.M(out.z))).norm();

  if (options.certificate_points) {
    const double tol = 10.0 * options.tol * (1.0 + data.M(out.z).norm());
    const SampleReport report = certify_resolvent(prob, out.z, *options.certificate_points, tol);
    out.certificate_margin = report.worst_margin;
    if (!report.ok()) {
      throw SolverError(SolverFailure::iteration_cap,
                        "resolvent certificate failed (worst margin " + std::to_string(report.worst_margin) + ")");
    }
  }
  return out;
}

std::shared_ptr<const std::vector<Vector>> resolvent_certificate_points(const ConvexSet& C, std::size_t count,
                                                                        std::uint64_t seed) {
  Rng rng(seed);
  const Vector center = C.witness() ? *C.witness() : Vector::Zero(C.dim());
  return std::make_shared<const std::vector<Vector>>(verification_points(C, rng, count, center, 3.0));
}

SampleReport certify_resolvent(const ResolventProblem& prob, const Vector& z, const std::vector<Vector>& points,
                               double tol) {
  SampleReport report;
  report.note = "sampled y in C (box vertices and random points); margins divided by max(1, ||y - z||)";
  const double outside = distance(prob.C, z);
  if (outside > 1e-9 * scale_of(z)) report.add(-outside, tol);
  for (const auto& y : points) {
    report.add(resolvent_margin(prob, z, y) / std::max(1.0, (y - z).norm()), tol);
  }
  return report;
}

namespace {

Vector random_anchor(const ConvexSet& C, Rng& rng) {
  const Vector center = C.witness() ? *C.witness() : Vector::Zero(C.dim());
  return sample_in_set(C, rng, center, 3.0) + rng.normal_vector(C.dim());
}

Vector apply(ResolventProblem prob, const Vector& x) {
  prob.x = x;
  return solve_resolvent(prob).z;
}

}  // namespace

SampleReport check_firm_nonexpansiveness(const ResolventProblem& prob, std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  SampleReport report;
  report.note = "anchors drawn around C";
  const auto& space = prob.space;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vector x = random_anchor(prob.C, rng);
    const Vector y = random_anchor(prob.C, rng);
    const Vector tx = apply(prob, x);
    const Vector ty = apply(prob, y);
    const Vector d = tx - ty;
    const double lhs = d.dot(duality_map(space, tx) - duality_map(space, ty));
    const double rhs = d.dot(duality_map(space, x) - duality_map(space, y));
    report.add(rhs - lhs, 1e-6);
  }
  return report;
}

SampleReport check_resolvent_phi_inequality(const ResolventProblem& prob, const Vector& q, std::size_t samples,
                                            std::uint64_t seed) {
  Rng rng(seed);
  SampleReport report;
  report.note = "anchors drawn around C";
  const auto& space = prob.space;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector x = random_anchor(prob.C, rng);
    const Vector tx = apply(prob, x);
    report.add(lyapunov_phi(space, q, x) - lyapunov_phi(space, q, tx) - lyapunov_phi(space, tx, x), 1e-6);
  }
  return report;
}

}  // namespace hybrid
