#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace testutil {

// Two-sided KS statistic of a sample against an analytic CDF.
inline double ks_statistic(std::vector<double> draws,
                           const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

// Asymptotic 1% critical value of the KS statistic.
inline double ks_critical_1pct(size_t n) {
  return 1.6276 / std::sqrt(static_cast<double>(n));
}

// Adaptive quadrature over (0, inf).
inline double integrate_positive_axis(const std::function<double(double)>& f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f);
}

// Adaptive Gauss-Kronrod on a finite interval.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12);
}

// Empirical CDF comparison helper for two samples (two-sample KS).
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_two_sample_critical_1pct(size_t na, size_t nb) {
  const double n = static_cast<double>(na) * static_cast<double>(nb) /
                   static_cast<double>(na + nb);
  return 1.6276 / std::sqrt(n);
}

}  // namespace testutil
