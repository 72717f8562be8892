#include <doctest.h>

#include "hybrid/resolvent.hpp"
#include "hybrid/sampling.hpp"

using namespace hybrid;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("zero bifunction gives the generalized projection") {
  const ConvexSet ball = ConvexSet::ball(v2(0.5, 0), 1.0);
  for (const auto& s : {SpaceSpec::hilbert(2), SpaceSpec::lp(2, 1.5), SpaceSpec::lp(2, 3.0)}) {
    for (double r : {0.3, 1.0, 4.0}) {
      const ResolventProblem prob{s, ball, Bifunction::zero(2), MonotoneMap::zero(2), r, v2(3, -1)};
      CHECK((solve_resolvent(prob).z - gen_project(s, ball, v2(3, -1))).norm() < 1e-8);
    }
  }
}

TEST_CASE("proximal step of a quadratic") {
  const ResolventProblem prob{SpaceSpec::hilbert(2), ConvexSet::whole_space(2),
                              Bifunction::separable(Matrix::Identity(2, 2), v2(0, 0)), MonotoneMap::zero(2), 1.0,
                              v2(2, 2)};
  const Vector z = solve_resolvent(prob).z;
  CHECK((z - v2(1, 1)).norm() < 1e-10);
  Rng rng(2);
  for (int k = 0; k < 100; ++k) CHECK(resolvent_margin(prob, z, rng.uniform_vector(2, -5.0, 5.0)) >= -1e-9);
}

TEST_CASE("forward step with an affine B") {
  const MonotoneMap B = MonotoneMap::affine(Matrix::Identity(2, 2), v2(0, 0));
  const ResolventProblem prob{SpaceSpec::hilbert(2), ConvexSet::whole_space(2), Bifunction::zero(2), B, 1.0,
                              v2(2, 0)};
  const Vector z = solve_resolvent(prob).z;
  CHECK(z.norm() < 1e-10);
  CHECK((resolvent_operator(prob, z)).norm() < 1e-10);
}

TEST_CASE("firm nonexpansiveness") {
  const MonotoneMap zero = MonotoneMap::zero(2);
  const ResolventProblem ball{SpaceSpec::hilbert(2), ConvexSet::ball(v2(0, 0), 1.0), Bifunction::zero(2), zero, 1.0,
                              v2(0, 0)};
  CHECK(check_firm_nonexpansiveness(ball, 100).worst_margin >= -1e-6);
  const ResolventProblem prox{SpaceSpec::hilbert(2), ConvexSet::whole_space(2),
                              Bifunction::separable(v2(3, 1).asDiagonal(), v2(1, 0)), zero, 0.7, v2(0, 0)};
  CHECK(check_firm_nonexpansiveness(prox, 100).worst_margin >= -1e-6);
}

TEST_CASE("phi inequality at solutions") {
  const ConvexSet box = ConvexSet::cube(2, -1.0, 1.0);
  const Matrix Q = v2(2, 1).asDiagonal();
  const Vector q = v2(0.3, -0.4);
  const ResolventProblem vi{SpaceSpec::hilbert(2), box, Bifunction::vi(MonotoneMap::affine(Q, -Q * q)),
                            MonotoneMap::zero(2), 1.0, q};
  CHECK((solve_resolvent(vi).z - q).norm() < 1e-10);
  CHECK(check_resolvent_phi_inequality(vi, q, 100).worst_margin >= -1e-6);
}

TEST_CASE("certificate detects a wrong point") {
  const ConvexSet box = ConvexSet::cube(2, -1.0, 1.0);
  const ResolventProblem prob{SpaceSpec::lp(2, 1.5), box, Bifunction::vi(MonotoneMap::affine(Matrix::Identity(2, 2),
                                                                                               v2(0.2, 0))),
                              MonotoneMap::zero(2), 1.0, v2(2, -2)};
  const auto points = resolvent_certificate_points(box, 200, 1);
  const Vector z = solve_resolvent(prob).z;
  CHECK(certify_resolvent(prob, z, *points, 1e-8).ok());
  CHECK_FALSE(certify_resolvent(prob, Vector(z + v2(0, 0.3)), *points, 1e-8).ok());
}
