#include "hybrid/sampling.hpp"

#include <cmath>
#include <numbers>

#include "hybrid/convex_set.hpp"

namespace hybrid {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u == 0.0) u = uniform();
  const double v = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u));
  spare_ = radius * std::sin(2.0 * std::numbers::pi * v);
  has_spare_ = true;
  return radius * std::cos(2.0 * std::numbers::pi * v);
}

Vector Rng::uniform_vector(Index n, double lo, double hi) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

Vector Rng::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector Rng::unit_vector(Index n) {
  Vector v = normal_vector(n);
  double nrm = v.norm();
  while (nrm == 0.0) {
    v = normal_vector(n);
    nrm = v.norm();
  }
  return v / nrm;
}

Vector sample_in_set(const ConvexSet& set, Rng& rng, const Vector& center, double radius) {
  const Index n = set.dim();
  if (const auto* box = std::get_if<ConvexSet::Box>(&set.variant())) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform(box->lower(i), box->upper(i));
    return v;
  }
  if (const auto* ball = std::get_if<ConvexSet::Ball>(&set.variant())) {
    const double r = ball->radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    return ball->center + r * rng.unit_vector(n);
  }
  // Draw from the bounding region and map into the set; this concentrates
  // some mass on the boundary, which is where the checks are sharpest.
  Vector v;
  if (const auto bb = set.bounding_box()) {
    v.resize(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform(bb->lower(i), bb->upper(i));
  } else {
    v = center + rng.uniform_vector(n, -radius, radius);
  }
  return metric_project(set, v);
}

std::vector<Vector> verification_points(const ConvexSet& set, Rng& rng, std::size_t count,
                                        const Vector& center, double radius,
                                        std::size_t max_vertices) {
  std::vector<Vector> out;
  std::optional<ConvexSet::Box> box;
  if (const auto* b = std::get_if<ConvexSet::Box>(&set.variant())) box = *b;
  if (box) {
    const Index n = set.dim();
    const bool all = n < 63 && (std::size_t{1} << n) <= max_vertices;
    const std::size_t total = all ? (std::size_t{1} << n) : max_vertices;
    for (std::size_t k = 0; k < total; ++k) {
      Vector v(n);
      for (Index i = 0; i < n; ++i) {
        const bool up = all ? ((k >> i) & 1U) != 0 : rng.uniform() < 0.5;
        v(i) = up ? box->upper(i) : box->lower(i);
      }
      out.push_back(std::move(v));
    }
  }
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_in_set(set, rng, center, radius));
  return out;
}

}  // namespace hybrid
