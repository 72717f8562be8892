#ifndef HYBRID_SCHEDULE_HPP
#define HYBRID_SCHEDULE_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace hybrid {

//! Parameter sequence n -> s_n, n = 0, 1, 2, ...
class Schedule {
 public:
  enum class Kind { constant, list, harmonic };

  static Schedule constant(double value);
  //! The listed values, then the last value repeated.
  static Schedule list(std::vector<double> values);
  //! scale / (n + 2).
  static Schedule harmonic(double scale);

  Kind kind() const { return kind_; }
  const std::vector<double>& values() const { return values_; }

  double at(std::size_t n) const;
  //! Extremes over n < horizon (over every value the schedule can take, for
  //! constant and list schedules).
  double min_over(std::size_t horizon) const;
  double max_over(std::size_t horizon) const;

  std::string describe() const;

 private:
  Schedule(Kind kind, std::vector<double> values) : kind_(kind), values_(std::move(values)) {}

  Kind kind_;
  std::vector<double> values_;
};

}  // namespace hybrid

#endif  // HYBRID_SCHEDULE_HPP
