#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rvm {

/// SplitMix64 finalizer; the basis of all seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream-split function: every chain / replicate / subsystem obtains its
/// own seed as derive_seed(root, {tag0, tag1, ...}).  Each path element is
/// folded in through SplitMix64, so distinct paths give independent streams
/// and the mapping is stable across platforms and thread counts.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

/// Deterministic random stream.  The engine is std::mt19937_64; all variate
/// transformations are implemented here so that draw sequences are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Marsaglia's polar method (second variate cached).
  double normal();

  /// Gamma(shape, rate), Marsaglia–Tsang squeeze, shape < 1 boosted.
  double gamma(double shape, double rate);

  /// InverseGamma(shape, scale): 1 / Gamma(shape, rate = scale).
  double inverse_gamma(double shape, double scale) {
    return 1.0 / gamma(shape, scale);
  }

  /// InverseGaussian(mean, shape), Michael–Schucany–Haas transform.
  double inverse_gaussian(double mean, double shape);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Generalized inverse Gaussian with density proportional to
/// x^(p-1) exp(-(a x + b / x) / 2), x > 0, by ratio-of-uniforms rejection.
/// Requires a > 0 and b >= 0 (b == 0 needs p > 0 and reduces to a Gamma).
double gig_draw(Rng& rng, double p, double a, double b);

}  // namespace rvm
