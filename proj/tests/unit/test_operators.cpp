#include <doctest.h>

#include "hybrid/operators.hpp"
#include "hybrid/sampling.hpp"

using namespace hybrid;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("inverse strong monotonicity") {
  const SpaceSpec H = SpaceSpec::hilbert(2);
  CHECK(check_ism(IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), v2(0, 0)), 1.0), H, 200).ok());
  const Matrix D = v2(1, 2).asDiagonal();
  CHECK(check_ism(IsmOperator::make(MonotoneMap::affine(D, v2(0, 0)), 0.5), H, 200).ok());
  CHECK(check_ism(IsmOperator::make(MonotoneMap::zero(2), 0.7), H, 200).ok());
}

TEST_CASE("default gamma is 1 / lambda_max clipped below 1") {
  const Matrix D = v2(1, 4).asDiagonal();
  CHECK(IsmOperator::make(MonotoneMap::affine(D, v2(0, 0))).gamma() == doctest::Approx(0.25));
  const double g = IsmOperator::make(MonotoneMap::affine(0.5 * Matrix::Identity(2, 2), v2(0, 0))).gamma();
  CHECK(g > 0.0);
  CHECK(g < 1.0);
}

TEST_CASE("too large a gamma is rejected") {
  const Matrix D = v2(1, 2).asDiagonal();
  CHECK_THROWS_AS(IsmOperator::make(MonotoneMap::affine(D, v2(0, 0)), 0.9), ConfigError);
  CHECK_THROWS_AS(IsmOperator::make(MonotoneMap::zero(2), 1.5), ConfigError);
}

TEST_CASE("relative nonexpansiveness") {
  const SpaceSpec H = SpaceSpec::hilbert(2);
  const SampleReport id = check_relatively_nonexpansive(FixedPointMap::identity(2), H, 200);
  CHECK(id.ok());
  CHECK(id.worst_margin == 0.0);
  const auto ball = FixedPointMap::metric_projection(ConvexSet::ball(v2(0, 0), 1.0));
  CHECK(check_relatively_nonexpansive(ball, H, 500).worst_margin >= -1e-10);
  Matrix a(1, 2);
  a << 1.0, -2.0;
  const auto line = FixedPointMap::metric_projection(ConvexSet::affine(a, Vector::Constant(1, 0.5)));
  CHECK(check_relatively_nonexpansive(FixedPointMap::averaged(0.5, line), H, 500).worst_margin >= -1e-10);
}

TEST_CASE("fixed sets of the catalog maps") {
  const SpaceSpec L = SpaceSpec::lp(2, 1.5);
  const ConvexSet box = ConvexSet::cube(2, 0.0, 1.0);
  const auto T = FixedPointMap::averaged(0.25, FixedPointMap::generalized_projection(box));
  const Vector p = v2(0.2, 0.9);
  CHECK((T(L, p) - p).norm() < 1e-12);
  CHECK((T(L, v2(3, 3)) - v2(3, 3)).norm() > 0.1);
  const auto R = FixedPointMap::resolvent(MonotoneMap::affine(Matrix::Identity(2, 2), -v2(1, 2)), 0.5);
  CHECK((R(SpaceSpec::hilbert(2), v2(1, 2)) - v2(1, 2)).norm() < 1e-12);
  // (I + r A)^{-1} x with A = I - (1, 2): (x + r (1, 2)) / (1 + r).
  CHECK((R(SpaceSpec::hilbert(2), v2(4, 4)) - (v2(4, 4) + 0.5 * v2(1, 2)) / 1.5).norm() < 1e-12);
  CHECK_THROWS_AS(R.validate(L), ConfigError);
  CHECK_NOTHROW(R.validate(SpaceSpec::hilbert(2)));
  CHECK_THROWS_AS(FixedPointMap::metric_projection(box).validate(L), ConfigError);
}

TEST_CASE("zero reduction") {
  const ConvexSet box = ConvexSet::cube(2, 0.0, 2.0);
  CHECK(zero_reduction_holds(IsmOperator::make(MonotoneMap::zero(2)), box, v2(1, 1), 100));
  const IsmOperator A = IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), -v2(1, 1)));
  CHECK(zero_reduction_holds(A, box, v2(1, 1), 100));
  CHECK_FALSE(zero_reduction_holds(A, box, v2(0, 0), 100));
}

TEST_CASE("bifunctions") {
  const Matrix H = v2(2, 1).asDiagonal();
  const Bifunction f = Bifunction::separable(H, v2(1, -1));
  // f(x, y) = h(y) - h(x), h(z) = 1/2 <z - a, H (z - a)>.
  const auto h = [&](const Vector& z) { return 0.5 * (z - v2(1, -1)).dot(H * (z - v2(1, -1))); };
  CHECK(f(v2(0, 0), v2(2, 3)) == doctest::Approx(h(v2(2, 3)) - h(v2(0, 0))));
  const Bifunction g = Bifunction::vi(MonotoneMap::affine(H, v2(1, 0)));
  CHECK(g(v2(1, 1), v2(0, 2)) == doctest::Approx((H * v2(1, 1) + v2(1, 0)).dot(v2(-1, 1))));
  CHECK(Bifunction::zero(2)(v2(1, 2), v2(3, 4)) == 0.0);
}

TEST_CASE("equilibrium solution sets and residuals") {
  const ConvexSet C = ConvexSet::cube(2, -2.0, 2.0);
  const Bifunction f = Bifunction::separable(Matrix::Identity(2, 2), v2(0.5, -0.5));
  const auto sol = gep_solution_set(f, MonotoneMap::zero(2), C);
  REQUIRE(sol.has_value());
  CHECK(contains(*sol, v2(0.5, -0.5), 1e-12));
  CHECK_FALSE(contains(*sol, v2(0.5, 0.5), 1e-6));
  CHECK(gep_residual(f, MonotoneMap::zero(2), C, v2(0.5, -0.5)) < 1e-14);
  CHECK(gep_residual(f, MonotoneMap::zero(2), C, v2(0, 0)) == doctest::Approx(std::sqrt(0.5)));
  // A minimizer outside C: no exact description.
  const Bifunction far = Bifunction::separable(Matrix::Identity(2, 2), v2(5, 0));
  CHECK_FALSE(gep_solution_set(far, MonotoneMap::zero(2), C).has_value());
}

TEST_CASE("non-monotone maps are rejected") {
  Matrix Q(2, 2);
  Q << 1.0, 0.0, 0.0, -0.1;
  CHECK_THROWS_AS(MonotoneMap::affine(Q, v2(0, 0)), ConfigError);
  CHECK_THROWS_AS(FixedPointMap::averaged(1.0, FixedPointMap::identity(2)), ConfigError);
}
