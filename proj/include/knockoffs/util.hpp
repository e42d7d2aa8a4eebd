#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "knockoffs/errors.hpp"

namespace knockoffs {

struct IntervalEstimate {
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
inline IntervalEstimate wilson_interval(long successes, long trials,
                                        double z = 1.96) {
  if (trials <= 0 || successes < 0 || successes > trials)
    throw ValidationError("wilson_interval: need 0 <= successes <= trials, trials > 0");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  IntervalEstimate e;
  e.mean = phat;
  e.se = std::sqrt(phat * (1.0 - phat) / n);
  e.lo = std::max(0.0, center - half);
  e.hi = std::min(1.0, center + half);
  return e;
}

// Sample mean with normal-approximation interval.
inline IntervalEstimate mean_interval(const std::vector<double>& xs,
                                      double z = 1.96) {
  if (xs.empty()) throw ValidationError("mean_interval: empty sample");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  IntervalEstimate e;
  e.mean = m;
  e.se = std::sqrt(var / static_cast<double>(xs.size()));
  e.lo = m - z * e.se;
  e.hi = m + z * e.se;
  return e;
}

// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> xs, double level) {
  if (xs.empty()) throw ValidationError("quantile: empty sample");
  if (!(level >= 0.0 && level <= 1.0))
    throw ValidationError("quantile: level outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = level * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace knockoffs
