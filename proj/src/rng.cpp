#include "rvm/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "rvm/types.hpp"

namespace rvm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t id : path)
    s = splitmix64(s ^ (0x9E3779B97F4A7C15ULL * (id + 1)));
  return s;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_normal_ = true;
  return u * f;
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("Rng::gamma: shape and rate must be > 0");
  if (shape < 1.0) {
    // Boost to shape + 1 and correct with u^(1/shape).
    const double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::inverse_gaussian(double mean, double shape) {
  if (!(mean > 0.0) || !(shape > 0.0))
    throw std::invalid_argument("Rng::inverse_gaussian: parameters must be > 0");
  const double nu = normal();
  const double y = nu * nu;
  const double x = mean + mean * mean * y / (2.0 * shape) -
                   mean / (2.0 * shape) *
                       std::sqrt(4.0 * mean * shape * y + mean * mean * y * y);
  if (uniform() <= mean / (mean + x)) return x;
  return mean * mean / x;
}

namespace {

// log of the unnormalized GIG density.
inline double gig_logh(double x, double p, double a, double b) {
  return (p - 1.0) * std::log(x) - 0.5 * (a * x + b / x);
}

// Mode of x^(p-1) exp(-(ax+b/x)/2), written to avoid cancellation for p < 1.
inline double gig_mode(double p, double a, double b) {
  const double pm = p - 1.0;
  const double r = std::sqrt(pm * pm + a * b);
  if (pm >= 0.0) return (pm + r) / a;
  return b / (r - pm);
}

}  // namespace

double gig_draw(Rng& rng, double p, double a, double b) {
  if (!(a > 0.0) || b < 0.0)
    throw std::invalid_argument("gig_draw: need a > 0 and b >= 0");
  if (b == 0.0) {
    if (!(p > 0.0))
      throw NumericalError("gig_draw: b == 0 with p <= 0 is not a distribution");
    return rng.gamma(p, a / 2.0);
  }

  const double m = gig_mode(p, a, b);
  const double lhm = gig_logh(m, p, a, b);
  // sup of x * sqrt(h(x)) sits at the mode of x^(p+1) exp(-(ax+b/x)/2).
  const double m2 = gig_mode(p + 2.0, a, b);
  const double vplus = m2 * std::exp(0.5 * (gig_logh(m2, p, a, b) - lhm));

  for (long it = 0; it < 1000000; ++it) {
    const double u = rng.uniform();
    const double v = rng.uniform() * vplus;
    const double x = v / u;
    if (2.0 * std::log(u) <= gig_logh(x, p, a, b) - lhm) return x;
  }
  throw NumericalError("gig_draw: ratio-of-uniforms rejection did not accept "
                       "(p=" + std::to_string(p) + ", a=" + std::to_string(a) +
                       ", b=" + std::to_string(b) + ")");
}

}  // namespace rvm
