#include "rvm/priors.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "rvm/types.hpp"

namespace rvm {

namespace {

const char* family_name(PriorFamily f) {
  switch (f) {
    case PriorFamily::Gamma: return "gamma";
    case PriorFamily::InverseGamma: return "inverse_gamma";
    case PriorFamily::InverseGaussian: return "inverse_gaussian";
    case PriorFamily::BetaPrime: return "beta_prime";
    case PriorFamily::PointMass: return "point_mass";
  }
  return "?";
}

}  // namespace

LocalVariancePrior::LocalVariancePrior(PriorFamily family, double p1, double p2)
    : family_(family), p1_(p1), p2_(p2) {
  if (family_ == PriorFamily::PointMass) {
    if (!(p1_ > 0.0))
      throw std::invalid_argument("point_mass: value must be > 0");
    p2_ = 0.0;
    return;
  }
  if (!(p1_ > 0.0) || !(p2_ > 0.0))
    throw std::invalid_argument(std::string(family_name(family_)) +
                                ": parameters must be > 0");
}

LocalVariancePrior LocalVariancePrior::parse(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError("prior spec must look like family(p1, p2): " + text);
  std::string name = text.substr(0, open);
  // Trim whitespace around the family name.
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
    name.erase(name.begin());
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
    name.pop_back();
  std::string args = text.substr(open + 1, close - open - 1);
  for (auto& c : args)
    if (c == ',') c = ' ';
  std::istringstream in(args);
  double p1 = 0.0, p2 = 0.0;
  if (!(in >> p1)) throw ConfigError("prior spec needs at least one parameter: " + text);
  const bool has_p2 = static_cast<bool>(in >> p2);

  if (name == "point_mass") {
    if (has_p2) throw ConfigError("point_mass takes one parameter: " + text);
    return LocalVariancePrior(PriorFamily::PointMass, p1);
  }
  if (!has_p2) throw ConfigError(name + " takes two parameters: " + text);
  if (name == "gamma") return {PriorFamily::Gamma, p1, p2};
  if (name == "inverse_gamma") return {PriorFamily::InverseGamma, p1, p2};
  if (name == "inverse_gaussian") return {PriorFamily::InverseGaussian, p1, p2};
  if (name == "beta_prime") return {PriorFamily::BetaPrime, p1, p2};
  throw ConfigError("unknown prior family: " + name);
}

std::string LocalVariancePrior::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << family_name(family_) << "(" << p1_;
  if (family_ != PriorFamily::PointMass) out << ", " << p2_;
  out << ")";
  return out.str();
}

double LocalVariancePrior::log_density(double x) const {
  if (!(x > 0.0))
    throw std::domain_error("prior density: lambda_sq must be > 0");
  switch (family_) {
    case PriorFamily::Gamma:
      // shape p1, rate p2
      return p1_ * std::log(p2_) - boost::math::lgamma(p1_) +
             (p1_ - 1.0) * std::log(x) - p2_ * x;
    case PriorFamily::InverseGamma:
      // shape p1, scale p2
      return p1_ * std::log(p2_) - boost::math::lgamma(p1_) -
             (p1_ + 1.0) * std::log(x) - p2_ / x;
    case PriorFamily::InverseGaussian: {
      // mean p1, shape p2
      const double d = x - p1_;
      return 0.5 * (std::log(p2_) - std::log(2.0 * M_PI) - 3.0 * std::log(x)) -
             p2_ * d * d / (2.0 * p1_ * p1_ * x);
    }
    case PriorFamily::BetaPrime:
      // density x^(a-1) (1+x)^(-a-b) / B(a, b)
      return (p1_ - 1.0) * std::log(x) - (p1_ + p2_) * std::log1p(x) +
             boost::math::lgamma(p1_ + p2_) - boost::math::lgamma(p1_) -
             boost::math::lgamma(p2_);
    case PriorFamily::PointMass:
      throw std::domain_error("point_mass prior has no density");
  }
  throw std::logic_error("unreachable");
}

double LocalVariancePrior::density(double x) const { return std::exp(log_density(x)); }

double LocalVariancePrior::sample(Rng& rng) const {
  switch (family_) {
    case PriorFamily::Gamma: return rng.gamma(p1_, p2_);
    case PriorFamily::InverseGamma: return rng.inverse_gamma(p1_, p2_);
    case PriorFamily::InverseGaussian: return rng.inverse_gaussian(p1_, p2_);
    case PriorFamily::BetaPrime:
      // Exact as a ratio of two gamma draws.
      return rng.gamma(p1_, 1.0) / rng.gamma(p2_, 1.0);
    case PriorFamily::PointMass: return p1_;
  }
  throw std::logic_error("unreachable");
}

double LocalVariancePrior::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  switch (family_) {
    case PriorFamily::Gamma:
      return boost::math::cdf(boost::math::gamma_distribution<>(p1_, 1.0 / p2_), x);
    case PriorFamily::InverseGamma:
      return boost::math::cdf(boost::math::inverse_gamma_distribution<>(p1_, p2_), x);
    case PriorFamily::InverseGaussian:
      return boost::math::cdf(boost::math::inverse_gaussian_distribution<>(p1_, p2_), x);
    case PriorFamily::BetaPrime:
      // X/(1+X) ~ Beta(a, b)
      return boost::math::cdf(boost::math::beta_distribution<>(p1_, p2_), x / (1.0 + x));
    case PriorFamily::PointMass:
      return x >= p1_ ? 1.0 : 0.0;
  }
  throw std::logic_error("unreachable");
}

double LocalVariancePrior::quantile(double prob) const {
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("quantile: prob must be in [0, 1]");
  switch (family_) {
    case PriorFamily::Gamma:
      return boost::math::quantile(boost::math::gamma_distribution<>(p1_, 1.0 / p2_), prob);
    case PriorFamily::InverseGamma:
      return boost::math::quantile(boost::math::inverse_gamma_distribution<>(p1_, p2_), prob);
    case PriorFamily::InverseGaussian:
      return boost::math::quantile(
          boost::math::inverse_gaussian_distribution<>(p1_, p2_), prob);
    case PriorFamily::BetaPrime: {
      const double q = boost::math::quantile(boost::math::beta_distribution<>(p1_, p2_), prob);
      return q / (1.0 - q);
    }
    case PriorFamily::PointMass:
      return p1_;
  }
  throw std::logic_error("unreachable");
}

bool positive_moment_finite(const LocalVariancePrior& prior, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("positive_moment_finite: m must be > 0");
  switch (prior.family()) {
    case PriorFamily::Gamma:
    case PriorFamily::InverseGaussian:
    case PriorFamily::PointMass:
      return true;
    case PriorFamily::InverseGamma:
      return prior.param1() > m;  // shape > m
    case PriorFamily::BetaPrime:
      return prior.param2() > m;  // b > m
  }
  throw std::logic_error("unreachable");
}

bool inverse_second_moment_finite(const LocalVariancePrior& prior) {
  switch (prior.family()) {
    case PriorFamily::Gamma:
      return prior.param1() > 1.0;  // shape > 1
    case PriorFamily::InverseGamma:
    case PriorFamily::InverseGaussian:
    case PriorFamily::PointMass:
      return true;
    case PriorFamily::BetaPrime:
      return prior.param1() > 1.0;  // a > 1
  }
  throw std::logic_error("unreachable");
}

MomentReport classify_moments(const LocalVariancePrior& prior, double delta,
                              long estimate_draws, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("classify_moments: delta must be > 0");
  MomentReport rep;
  rep.delta = delta;
  rep.fourth_moment_finite = positive_moment_finite(prior, 2.0);
  rep.inverse_second_finite = inverse_second_moment_finite(prior);
  rep.one_plus_delta_finite = positive_moment_finite(prior, 1.0 + delta);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.fourth_moment_estimate = nan;
  rep.inverse_second_estimate = nan;
  rep.one_plus_delta_estimate = nan;
  if (estimate_draws > 0) {
    Rng rng(derive_seed(seed, {0x4d}));
    double s4 = 0.0, sinv = 0.0, s1d = 0.0;
    for (long i = 0; i < estimate_draws; ++i) {
      const double x = prior.sample(rng);
      s4 += x * x;
      sinv += 1.0 / x;
      s1d += std::pow(x, 1.0 + delta);
    }
    const double inv_n = 1.0 / static_cast<double>(estimate_draws);
    if (rep.fourth_moment_finite) rep.fourth_moment_estimate = s4 * inv_n;
    if (rep.inverse_second_finite) rep.inverse_second_estimate = sinv * inv_n;
    if (rep.one_plus_delta_finite) rep.one_plus_delta_estimate = s1d * inv_n;
  }
  return rep;
}

std::string to_string(ScheduleRegime r) {
  switch (r) {
    case ScheduleRegime::BoundedKernel: return "bounded_kernel";
    case ScheduleRegime::PolynomialContraction: return "polynomial_contraction";
    case ScheduleRegime::PolynomialConsistency: return "polynomial_consistency";
  }
  return "?";
}

ScheduleRegime schedule_regime_from_string(const std::string& s) {
  if (s == "bounded_kernel") return ScheduleRegime::BoundedKernel;
  if (s == "polynomial_contraction") return ScheduleRegime::PolynomialContraction;
  if (s == "polynomial_consistency") return ScheduleRegime::PolynomialConsistency;
  throw ConfigError("unknown schedule regime: " + s);
}

double tau_squared(const GlobalSchedule& schedule, long n, long q_n,
                   std::optional<double> t1) {
  if (n < 1) throw std::invalid_argument("tau_squared: n must be >= 1");
  if (q_n < 1 || q_n > n)
    throw std::invalid_argument("tau_squared: need 1 <= q_n <= n");
  if (!(schedule.c > 0.0)) throw std::invalid_argument("tau_squared: c must be > 0");
  const double nd = static_cast<double>(n);
  const double qd = static_cast<double>(q_n);
  switch (schedule.regime) {
    case ScheduleRegime::BoundedKernel: {
      if (!(schedule.delta > 0.0))
        throw std::invalid_argument("tau_squared: delta must be > 0");
      const double expo = -1.0 - 1.0 / (1.0 + schedule.delta);
      return schedule.c * qd * std::pow(nd, expo);
    }
    case ScheduleRegime::PolynomialContraction:
      return schedule.c * qd * std::pow(nd, -1.5);
    case ScheduleRegime::PolynomialConsistency: {
      if (!t1.has_value() || !(*t1 > 0.0))
        throw std::invalid_argument(
            "tau_squared: polynomial_consistency requires t1 > 0");
      return schedule.c * std::sqrt(qd / (*t1 * *t1) * std::pow(nd, -1.5));
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace rvm
