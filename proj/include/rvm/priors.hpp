#pragma once

#include <optional>
#include <string>

#include "rvm/rng.hpp"

namespace rvm {

enum class PriorFamily { Gamma, InverseGamma, InverseGaussian, BetaPrime, PointMass };

/// Prior on a single local variance lambda^2.  Parameterizations:
///   gamma(shape, rate), inverse_gamma(shape, scale),
///   inverse_gaussian(mean, shape), beta_prime(a, b), point_mass(v).
class LocalVariancePrior {
 public:
  LocalVariancePrior(PriorFamily family, double p1, double p2 = 0.0);

  static LocalVariancePrior parse(const std::string& text);  // "family(p1, p2)"

  PriorFamily family() const { return family_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  std::string to_string() const;

  /// Density at lambda_sq > 0.  PointMass has no density (throws).
  double density(double lambda_sq) const;
  double log_density(double lambda_sq) const;

  /// One i.i.d. draw.
  double sample(Rng& rng) const;

  /// CDF and quantile (used for grid ranges and distribution tests).
  double cdf(double lambda_sq) const;
  double quantile(double prob) const;

 private:
  PriorFamily family_;
  double p1_, p2_;
};

/// Closed-form moment classification with optional Monte-Carlo estimates.
struct MomentReport {
  bool fourth_moment_finite = false;    // E[(lambda^2)^2] < inf
  bool inverse_second_finite = false;   // E[(lambda^2)^-1] < inf
  double delta = 1.0;
  bool one_plus_delta_finite = false;   // E[(lambda^2)^(1+delta)] < inf
  // Monte-Carlo estimates where the classification says finite (NaN otherwise).
  double fourth_moment_estimate = 0.0;
  double inverse_second_estimate = 0.0;
  double one_plus_delta_estimate = 0.0;
};

/// Whether E[(lambda^2)^m] is finite for m > 0 (closed-form rule per family).
bool positive_moment_finite(const LocalVariancePrior& prior, double m);

/// Whether E[(lambda^2)^-1] is finite.
bool inverse_second_moment_finite(const LocalVariancePrior& prior);

/// Classify; if estimate_draws > 0, attach Monte-Carlo estimates.
MomentReport classify_moments(const LocalVariancePrior& prior, double delta = 1.0,
                              long estimate_draws = 0, std::uint64_t seed = 0);

enum class ScheduleRegime { BoundedKernel, PolynomialContraction, PolynomialConsistency };

std::string to_string(ScheduleRegime r);
ScheduleRegime schedule_regime_from_string(const std::string& s);

/// Deterministic global shrinkage schedule tau_n^2.
///   bounded_kernel:           c * q_n * n^(-1 - 1/(1+delta))   (delta = 1 -> n^(-3/2))
///   polynomial_contraction:   c * q_n * n^(-3/2)
///   polynomial_consistency:   c * sqrt(q_n * t1^-2 * n^(-3/2))
struct GlobalSchedule {
  ScheduleRegime regime = ScheduleRegime::BoundedKernel;
  double c = 1.0;
  double delta = 1.0;  // bounded_kernel moment-weakening knob
};

double tau_squared(const GlobalSchedule& schedule, long n, long q_n,
                   std::optional<double> t1 = std::nullopt);

}  // namespace rvm
