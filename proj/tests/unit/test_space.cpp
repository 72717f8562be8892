#include <doctest.h>

#include <cmath>

#include "hybrid/sampling.hpp"
#include "hybrid/space.hpp"

using namespace hybrid;

namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

// Independent l_p evaluation for the oracles below.
double lp_norm(const Vector& x, double p) {
  double s = 0.0;
  for (double xi : x) s += std::pow(std::abs(xi), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

TEST_CASE("norms") {
  CHECK(norm(SpaceSpec::hilbert(2), v2(3, 4)) == doctest::Approx(5.0));
  CHECK(norm(SpaceSpec::lp(2, 3.0), v2(1, 1)) == doctest::Approx(std::cbrt(2.0)).epsilon(1e-14));
  CHECK(norm(SpaceSpec::lp(2, 1.5), v2(0, 0)) == 0.0);
}

TEST_CASE("dual norms") {
  CHECK(dual_norm(SpaceSpec::hilbert(2), v2(3, 4)) == doctest::Approx(5.0));
  CHECK(dual_norm(SpaceSpec::lp(2, 3.0), v2(1, 1)) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
  CHECK(dual_norm(SpaceSpec::lp(2, 3.0), v2(0, 0)) == 0.0);
}

TEST_CASE("duality map") {
  const SpaceSpec l3 = SpaceSpec::lp(2, 3.0);
  CHECK((duality_map(SpaceSpec::hilbert(2), v2(2, -1)) - v2(2, -1)).norm() == 0.0);
  const Vector j = duality_map(l3, v2(1, 1));
  CHECK(j(0) == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK(j(1) == doctest::Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK(v2(1, 1).dot(j) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
  for (double p : {1.5, 3.0, 4.0}) {
    CHECK((duality_map(SpaceSpec::lp(2, p), v2(2, 0)) - v2(2, 0)).norm() < 1e-14);
  }
}

TEST_CASE("inverse duality map") {
  const SpaceSpec l3 = SpaceSpec::lp(2, 3.0);
  CHECK((duality_map_inverse(SpaceSpec::hilbert(2), v2(1, 2)) - v2(1, 2)).norm() == 0.0);
  const Vector u = std::pow(2.0, -1.0 / 3.0) * v2(1, 1);
  CHECK((duality_map_inverse(l3, u) - v2(1, 1)).norm() < 1e-14);
  CHECK((duality_map(l3, duality_map_inverse(l3, u)) - u).norm() < 1e-14);
  CHECK(duality_map_inverse(SpaceSpec::lp(2, 1.5), v2(0, 0)).norm() == 0.0);
}

TEST_CASE("phi") {
  CHECK(lyapunov_phi(SpaceSpec::hilbert(2), v2(3, 0), v2(0, 4)) == doctest::Approx(25.0));
  for (const auto& s : {SpaceSpec::hilbert(2), SpaceSpec::lp(2, 1.5), SpaceSpec::lp(2, 3.0)}) {
    CHECK(std::abs(lyapunov_phi(s, v2(1, 1), v2(1, 1))) < 1e-14);
  }
  CHECK(lyapunov_phi(SpaceSpec::lp(2, 1.5), v2(1, 0), v2(0, 1)) == doctest::Approx(2.0));
}

TEST_CASE("V functional") {
  const SpaceSpec l3 = SpaceSpec::lp(2, 3.0);
  const Vector x = v2(0.3, -1.7);
  CHECK(std::abs(v_functional(l3, x, duality_map(l3, x))) < 1e-13);
  CHECK(v_functional(SpaceSpec::hilbert(2), v2(1, 0), v2(0, 1)) == doctest::Approx(2.0));
  CHECK(v_functional(l3, v2(1, 1), v2(0, 0)) == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("random norms agree with a direct evaluation") {
  Rng rng(7);
  for (double p : {1.2, 1.5, 2.0, 3.0, 6.0}) {
    const SpaceSpec s = SpaceSpec::lp(4, p);
    for (int k = 0; k < 50; ++k) {
      const Vector x = rng.uniform_vector(4, -5.0, 5.0);
      CHECK(norm(s, x) == doctest::Approx(lp_norm(x, p)).epsilon(1e-13));
      CHECK(dual_norm(s, x) == doctest::Approx(lp_norm(x, p / (p - 1.0))).epsilon(1e-13));
    }
  }
}

TEST_CASE("space construction validates its parameters") {
  CHECK_THROWS_AS(SpaceSpec::lp(2, 1.0), ConfigError);
  CHECK_THROWS_AS(SpaceSpec::lp(2, 1.5, 1.5), ConfigError);
  CHECK_THROWS_AS(SpaceSpec::lp(2, 3.0, 0.5), ConfigError);
  CHECK_THROWS_AS(SpaceSpec::hilbert(0), ConfigError);
  CHECK_THROWS_AS(SpaceSpec::lp(2, 3.0).convexity_constant(), ConfigError);
  CHECK(SpaceSpec::lp(2, 1.5).convexity_constant() == doctest::Approx(std::sqrt(0.5)));
  CHECK(SpaceSpec::hilbert(3).convexity_constant() == 1.0);
}
