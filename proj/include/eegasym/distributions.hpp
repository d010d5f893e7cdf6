#pragma once

// Tail probabilities used by the rank tests and the regression.

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eegasym {

// Upper tail of chi-squared with `df` degrees of freedom.
inline double chi2_sf(double x, int df) {
  if (df <= 0) throw std::invalid_argument("chi2_sf: df must be positive");
  if (std::isnan(x)) throw std::invalid_argument("chi2_sf: x is NaN");
  if (x <= 0.0) return 1.0;
  if (df == 2) return std::exp(-x / 2.0);
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

// One-tailed upper probability P(T > t) of Student's t.
inline double student_t_sf(double t, int df) {
  if (df <= 0) throw std::invalid_argument("student_t_sf: df must be positive");
  if (std::isnan(t)) throw std::invalid_argument("student_t_sf: t is NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

inline double student_t_two_tailed(double t, int df) {
  if (std::isinf(t)) return 0.0;
  return std::min(1.0, 2.0 * student_t_sf(std::abs(t), df));
}

// Upper tail of the standard normal.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace eegasym
