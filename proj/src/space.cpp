#include "hybrid/space.hpp"

#include <limits>
#include <sstream>

#include "hybrid/sampling.hpp"

namespace hybrid {

namespace {

constexpr int kConvexitySamples = 256;

void require_dim(Index dim) {
  if (dim < 1) throw ConfigError("space dimension must be at least 1");
}

}  // namespace

SpaceSpec SpaceSpec::hilbert(Index dim) {
  require_dim(dim);
  return SpaceSpec(SpaceKind::hilbert, dim, 2.0, 1.0);
}

SpaceSpec SpaceSpec::lp(Index dim, double p, std::optional<double> c) {
  require_dim(dim);
  if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("lp exponent must satisfy p > 1");
  if (p > 2.0) {
    if (c) throw ConfigError("c is only meaningful for lp with 1 < p <= 2");
    return SpaceSpec(SpaceKind::lp, dim, p, std::numeric_limits<double>::quiet_NaN());
  }
  const double constant = c.value_or(std::sqrt(p - 1.0));
  if (!(constant > 0.0 && constant <= 1.0)) throw ConfigError("c must lie in (0, 1]");
  SpaceSpec space(SpaceKind::lp, dim, p, constant);
  const double margin = sampled_convexity_margin(space, constant, kConvexitySamples);
  if (margin < -1e-12) {
    std::ostringstream os;
    os << "c = " << constant << " violates ||x-y|| <= (2/c^2)||Jx-Jy|| on sampled pairs "
       << "(worst relative margin " << margin << ")";
    throw ConfigError(os.str());
  }
  return space;
}

double SpaceSpec::convexity_constant() const {
  if (!two_uniformly_convex()) {
    throw ConfigError("operation requires a 2-uniformly convex space; lp with p = " +
                      std::to_string(p_) + " > 2 is not");
  }
  return c_;
}

SpaceSpec SpaceSpec::generic_twin() const {
  if (!is_hilbert()) return *this;
  return SpaceSpec(SpaceKind::lp, dim_, 2.0, 1.0);
}

std::string SpaceSpec::describe() const {
  std::ostringstream os;
  if (is_hilbert()) {
    os << "hilbert(dim=" << dim_ << ")";
  } else {
    os << "lp(dim=" << dim_ << ", p=" << p_;
    if (two_uniformly_convex()) os << ", c=" << c_;
    os << ")";
  }
  return os.str();
}

double sampled_convexity_margin(const SpaceSpec& space, double c, int samples) {
  Rng rng(0x5eedc0de);
  const double factor = 2.0 / (c * c);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    // Mix scales so both the near-diagonal and the far regime are probed.
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const Vector x = scale * rng.normal_vector(space.dim());
    const Vector y = (k % 4 == 0) ? Vector(x + 1e-3 * scale * rng.normal_vector(space.dim()))
                                  : Vector(scale * rng.normal_vector(space.dim()));
    const double dist = norm(space, Vector(x - y));
    if (dist == 0.0) continue;
    const double rhs = factor * dual_norm(space, Vector(duality_map(space, x) - duality_map(space, y)));
    worst = std::min(worst, (rhs - dist) / dist);
  }
  return worst;
}

}  // namespace hybrid
