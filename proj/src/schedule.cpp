#include "hybrid/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hybrid/errors.hpp"

namespace hybrid {

namespace {

void check_finite(double v) {
  if (!std::isfinite(v)) throw ConfigError("schedule values must be finite");
}

}  // namespace

Schedule Schedule::constant(double value) {
  check_finite(value);
  return Schedule(Kind::constant, {value});
}

Schedule Schedule::list(std::vector<double> values) {
  if (values.empty()) throw ConfigError("schedule list must not be empty");
  for (double v : values) check_finite(v);
  return Schedule(Kind::list, std::move(values));
}

Schedule Schedule::harmonic(double scale) {
  check_finite(scale);
  if (!(scale > 0.0)) throw ConfigError("harmonic schedule scale must be positive");
  return Schedule(Kind::harmonic, {scale});
}

double Schedule::at(std::size_t n) const {
  switch (kind_) {
    case Kind::constant: return values_[0];
    case Kind::list: return values_[std::min(n, values_.size() - 1)];
    case Kind::harmonic: return values_[0] / (static_cast<double>(n) + 2.0);
  }
  return values_[0];
}

double Schedule::min_over(std::size_t horizon) const {
  if (kind_ == Kind::harmonic) return at(horizon == 0 ? 0 : horizon - 1);
  return *std::min_element(values_.begin(), values_.end());
}

double Schedule::max_over(std::size_t horizon) const {
  (void)horizon;
  if (kind_ == Kind::harmonic) return at(0);
  return *std::max_element(values_.begin(), values_.end());
}

std::string Schedule::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant: os << "const " << values_[0]; break;
    case Kind::harmonic: os << values_[0] << "/(n+2)"; break;
    case Kind::list:
      os << "list[" << values_.size() << "] ending " << values_.back();
      break;
  }
  return os.str();
}

}  // namespace hybrid
