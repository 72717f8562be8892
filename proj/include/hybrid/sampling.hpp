#ifndef HYBRID_SAMPLING_HPP
#define HYBRID_SAMPLING_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "hybrid/space.hpp"

namespace hybrid {

class ConvexSet;

//! Seeded generator with platform-independent uniform and normal draws
//! (the standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  Vector uniform_vector(Index n, double lo, double hi);
  Vector normal_vector(Index n);
  //! Uniform on the Euclidean sphere of radius 1.
  Vector unit_vector(Index n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

//! Draws a point of `set`.  Unbounded directions are confined to the cube of
//! half-width `radius` around `center` before being mapped into the set.
Vector sample_in_set(const ConvexSet& set, Rng& rng, const Vector& center, double radius);

//! Sample points used to approximate "for all y in C": box vertices (all of
//! them when 2^n <= max_vertices, otherwise a random subset) followed by
//! random points from sample_in_set.
std::vector<Vector> verification_points(const ConvexSet& set, Rng& rng, std::size_t count,
                                        const Vector& center, double radius,
                                        std::size_t max_vertices = 1024);

}  // namespace hybrid

#endif  // HYBRID_SAMPLING_HPP
