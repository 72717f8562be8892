#include <doctest.h>

#include <cmath>

#include "hybrid/convex_set.hpp"
#include "hybrid/sampling.hpp"

using namespace hybrid;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

Matrix row(double a, double b) {
  Matrix m(1, 2);
  m << a, b;
  return m;
}

}  // namespace

TEST_CASE("membership") {
  CHECK(contains(ConvexSet::cube(2, 0.0, 1.0), v2(0.5, 0.5), 0.0));
  CHECK_FALSE(contains(ConvexSet::ball(v2(0, 0), 1.0), v2(2, 0), 0.0));
  CHECK(contains(ConvexSet::halfspace(v2(1, 0), 0.0), v2(1e-9, 5), 1e-6));
  CHECK_FALSE(contains(ConvexSet::halfspace(v2(1, 0), 0.0), v2(1e-5, 5), 1e-6));
}

TEST_CASE("metric projection") {
  CHECK((metric_project(ConvexSet::ball(v2(0, 0), 1.0), v2(2, 0)) - v2(1, 0)).norm() < 1e-12);
  const ConvexSet quadrant = ConvexSet::intersection(
      {ConvexSet::halfspace(v2(-1, 0), 0.0), ConvexSet::halfspace(v2(0, -1), 0.0)}, Vector(v2(1, 1)));
  CHECK((metric_project(quadrant, v2(-1, -1)) - v2(0, 0)).norm() < 1e-10);
  const ConvexSet line = ConvexSet::affine(row(1, 1), Eigen::VectorXd::Constant(1, 2.0));
  CHECK((metric_project(line, v2(0, 0)) - v2(1, 1)).norm() < 1e-12);
}

TEST_CASE("metric projection satisfies the obtuse angle condition") {
  Rng rng(3);
  const ConvexSet set = ConvexSet::intersection(
      {ConvexSet::ball(Vector::Zero(3), 2.0), ConvexSet::halfspace(Vector::Ones(3), 1.0),
       ConvexSet::cube(3, -1.5, 1.5)},
      Vector(Vector::Zero(3)));
  for (int k = 0; k < 100; ++k) {
    const Vector x = rng.uniform_vector(3, -4.0, 4.0);
    const Vector px = metric_project(set, x);
    CHECK(contains(set, px, 1e-8));
    for (int i = 0; i < 10; ++i) {
      const Vector y = sample_in_set(set, rng, Vector::Zero(3), 2.0);
      CHECK((x - px).dot(y - px) <= 1e-8);
    }
  }
}

TEST_CASE("generalized projection") {
  const SpaceSpec H = SpaceSpec::hilbert(2);
  const SpaceSpec L = SpaceSpec::lp(2, 1.5);
  const ConvexSet ball = ConvexSet::ball(v2(0.5, 0), 1.0);
  CHECK((gen_project(H, ball, v2(3, 2)) - metric_project(ball, v2(3, 2))).norm() < 1e-12);

  const ConvexSet left = ConvexSet::halfspace(v2(1, 0), 0.0);
  const Vector z = gen_project(L, left, v2(1, 0));
  CHECK(z.norm() < 1e-8);
  // Grid search of phi(., (1, 0)) over the halfspace.
  double best = 1e300;
  Vector arg = v2(9, 9);
  for (double a = -2.0; a <= 0.0; a += 0.01) {
    for (double b = -2.0; b <= 2.0; b += 0.01) {
      const double val = lyapunov_phi(L, v2(a, b), v2(1, 0));
      if (val < best) {
        best = val;
        arg = v2(a, b);
      }
    }
  }
  CHECK(arg.norm() < 0.02);
  CHECK(lyapunov_phi(L, z, v2(1, 0)) <= best + 1e-10);

  const ConvexSet box = ConvexSet::cube(2, -1.0, 1.0);
  CHECK((gen_project(L, box, v2(0.3, -0.2)) - v2(0.3, -0.2)).norm() == 0.0);
}

TEST_CASE("projection onto a set shrunk by cuts") {
  const SpaceSpec H = SpaceSpec::hilbert(2);
  const ConvexSet R2 = ConvexSet::whole_space(2);
  const std::vector<Halfspace> box_cuts = {{v2(1, 0), 1.0}, {v2(0, 1), 1.0}};
  CHECK((project_onto_shrunk_set(H, R2, box_cuts, v2(2, 3)) - v2(1, 1)).norm() < 1e-10);
  CHECK((project_onto_shrunk_set(H, R2, std::vector<Halfspace>{{v2(1, 1), 0.0}}, v2(1, 1)) - v2(0, 0)).norm() < 1e-10);
  CHECK(project_onto_shrunk_set(SpaceSpec::lp(2, 1.5), R2, std::vector<Halfspace>{{v2(1, 0), 0.0}}, v2(1, 0)).norm() < 1e-8);
}

TEST_CASE("incremental projector matches a fresh projection") {
  Rng rng(11);
  const SpaceSpec L = SpaceSpec::lp(3, 1.5);
  const ConvexSet base = ConvexSet::cube(3, -2.0, 2.0);
  const Vector x0 = Eigen::Vector3d(3.0, -2.5, 1.0);
  ShrinkingProjector proj(L, base, x0);
  std::vector<Halfspace> cuts;
  for (int k = 0; k < 8; ++k) {
    const Vector a = rng.unit_vector(3);
    cuts.push_back(Halfspace{a, rng.uniform(0.1, 1.0)});
    proj.add_cut(cuts.back());
    const Vector z = proj.project();
    CHECK((z - project_onto_shrunk_set(L, base, cuts, x0)).norm() < 1e-7);
    CHECK(proj.max_cut_excess(z) <= 1e-9);
  }
}

TEST_CASE("infeasible cuts are reported") {
  const ConvexSet R2 = ConvexSet::whole_space(2);
  const std::vector<Halfspace> cuts = {{v2(1, 0), -1.0}, {v2(-1, 0), -1.0}};
  CHECK_THROWS_AS(project_onto_shrunk_set(SpaceSpec::hilbert(2), R2, cuts, v2(0, 0)), SolverError);
}

TEST_CASE("phi cuts") {
  const SpaceSpec H = SpaceSpec::hilbert(2);
  const SpaceSpec L = SpaceSpec::lp(2, 1.5);
  const Halfspace same = halfspace_from_phi_cut(L, v2(0.4, -2), v2(0.4, -2));
  CHECK(same.whole_space());
  CHECK(same.b == 0.0);

  // Perpendicular bisector {z1 <= 1}, up to scaling.
  const Halfspace h = halfspace_from_phi_cut(H, v2(0, 0), v2(2, 0));
  CHECK(std::abs(h.a(1)) < 1e-15);
  CHECK(h.b / h.a(0) == doctest::Approx(1.0));
  CHECK(h.a(0) > 0.0);

  const Halfspace g = halfspace_from_phi_cut(L, v2(0, 0), v2(1, 0));
  CHECK(std::abs(g.a(1)) < 1e-15);
  CHECK(g.b / g.a(0) == doctest::Approx(0.5));

  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Vector z = rng.uniform_vector(2, -3.0, 3.0);
    const double gap = lyapunov_phi(H, z, v2(2, 0)) - lyapunov_phi(H, z, v2(0, 0));
    if (std::abs(gap) > 1e-9) CHECK((h.excess(z) <= 0.0) == (gap >= 0.0));
  }
}

TEST_CASE("set construction rejects bad input") {
  CHECK_THROWS_AS(ConvexSet::ball(v2(0, 0), -1.0), ConfigError);
  CHECK_THROWS_AS(ConvexSet::box(v2(1, 0), v2(0, 1)), ConfigError);
  CHECK_THROWS(ConvexSet::halfspace(v2(0, 0), -1.0));
}
