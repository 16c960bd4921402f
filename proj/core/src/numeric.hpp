#ifndef CROWDLAB_SRC_NUMERIC_HPP_
#define CROWDLAB_SRC_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

namespace crowdlab {
namespace numeric {

// std::lgamma writes the global signgam on glibc; lgamma_r keeps chains
// independently runnable on separate threads.
inline double log_gamma(double x) {
#ifdef __GLIBC__
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace numeric
}  // namespace crowdlab

#endif  // CROWDLAB_SRC_NUMERIC_HPP_
