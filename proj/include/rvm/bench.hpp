#pragma once

#include <vector>

#include "rvm/gibbs.hpp"
#include "rvm/kernel.hpp"
#include "rvm/priors.hpp"
#include "rvm/types.hpp"

namespace rvm {

/// Ground truth generating Y = K beta0 + noise.
struct TrueModel {
  Vector beta0;
  int q_n = 0;  // number of nonzero entries
  double M = 0.0;
  double sigma0_sq = 0.0;
  std::vector<int> support;
};

enum class SupportRule { Uniform, FirstQ };
enum class ValueRule { FixedSign, UniformNonzero, GaussianUnbounded };

std::string to_string(SupportRule r);
std::string to_string(ValueRule r);
SupportRule support_rule_from_string(const std::string& s);
ValueRule value_rule_from_string(const std::string& s);

/// Place q_n nonzero values of magnitude <= M (GaussianUnbounded is the
/// deliberate exception, reported but never gated on).
TrueModel generate_truth(int n, int q_n, double M, double sigma0_sq,
                         SupportRule support_rule, ValueRule value_rule, Rng& rng);

/// Y = K beta0 + sigma0 * z with z standard normal.
Vector simulate_data(const Matrix& K, const TrueModel& truth, Rng& rng);

enum class CertRule {
  UnitInterval,   // eigenvalues within [1 - 1/n, 1 + 1/n]
  PThetaInterval  // eigenvalues within p^theta * [1 - 1/n, 1 + 1/n]
};

enum class PRuleMode { Fixed, TimesN, Consistency };

/// How the covariate count p grows with n.  Consistency uses
/// p = ceil(safety * (q_n n^(3/2))^(1/(2 theta))).
struct PRule {
  PRuleMode mode = PRuleMode::TimesN;
  double value = 1.0;  // fixed p, or the multiple of n
};

struct ExperimentConfig {
  std::vector<int> n_grid{50, 100, 200, 400};
  double gamma = 0.5;  // q_n = ceil(n^gamma)
  int replicates = 16;
  std::uint64_t root_seed = 0;
  DesignKind design_kind = DesignKind::Separated;
  KernelSpec kernel;
  bool scale_by_p_theta = false;  // divide kernel entries by p^theta
  PRule p_rule;
  double consistency_safety = 4.0;
  LocalVariancePrior prior{PriorFamily::InverseGamma, 3.0, 1.0};
  double a = 1.0;
  double b = 1.0;
  GlobalSchedule schedule;
  ChainConfig chain;  // chain.seed is ignored; per-cell seeds are derived
  CertRule cert_rule = CertRule::UnitInterval;
  SupportRule support_rule = SupportRule::Uniform;
  ValueRule value_rule = ValueRule::FixedSign;
  double M = 2.0;
  double sigma0_sq = 1.0;

  int q_of(int n) const;
  int p_of(int n) const;
  void validate() const;
};

/// One (n, replicate) cell of the experiment.
struct CellResult {
  int n = 0;
  int replicate = 0;
  int q = 0;
  int p = 0;
  double theta = 0.0;
  double t1 = 0.0;  // measured lambda_min of the kernel actually used
  double t2 = 0.0;  // measured lambda_max
  double tau_sq = 0.0;
  double err_sq = 0.0;        // |E(K beta | Y) - K beta0|^2
  double trace_var = 0.0;     // tr V(K beta | Y) estimate
  double err_sq_beta = 0.0;   // |E(beta | Y) - beta0|^2
  double trace_var_beta = 0.0;
  double tail_prob = 0.0;     // P(|K beta - K beta0|^2 >= threshold | Y)
  double se_tail = 0.0;
  double tail_prob_beta = 0.0;
  double se_tail_beta = 0.0;
  double threshold = 0.0;       // q * log(n/q) or q * t2^2, by regime
  double threshold_beta = 0.0;  // sqrt(q * t1^-2 * n^(3/2))
  double sqdist_mean = 0.0;     // estimate of E(|K beta - K beta0|^2 | Y)
  double se_sqdist = 0.0;
  double ess_min = 0.0;
  double rhat = 0.0;
  bool flagged = false;
  std::string flag_reason;
  std::uint64_t seed = 0;
};

CellResult run_cell(const ExperimentConfig& config, int n_index, int replicate);

struct BenchResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // ordered by (n_index, replicate)
};

/// Run all cells; independent jobs in a work pool, deterministic output
/// regardless of thread count.
BenchResult run_bench(const ExperimentConfig& config);

/// Per-n aggregates over unflagged replicates; flagged cells contribute to
/// no mean, s.e., fit, or curve.
struct Aggregate {
  int n = 0;
  int q = 0;
  int p = 0;
  int usable = 0;
  int flagged = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  double tau_sq = 0.0;
  double threshold = 0.0;
  double threshold_beta = 0.0;
  double err_sq = 0.0, err_sq_se = 0.0;
  double trace_var = 0.0, trace_var_se = 0.0;
  double err_sq_beta = 0.0, err_sq_beta_se = 0.0;
  double trace_var_beta = 0.0, trace_var_beta_se = 0.0;
  double tail = 0.0, tail_se = 0.0;
  double tail_beta = 0.0, tail_beta_se = 0.0;
  // Ratios against the candidate rates.
  double err_over_q = 0.0;
  double trace_over_q = 0.0;
  double err_over_q_t2sq = 0.0;
  double err_over_q_logratio = 0.0;  // err_sq / (q log(n/q)), companion metric
  double err_beta_normalized = 0.0;  // err_sq_beta / threshold_beta
};

std::vector<Aggregate> aggregate_cells(const std::vector<CellResult>& cells);

enum class RateMetric { ErrSq, TraceVar, ErrSqBeta, TraceVarBeta };
enum class RateAgainst { Q, QT2Sq };

std::string to_string(RateMetric m);
std::string to_string(RateAgainst a);
RateMetric rate_metric_from_string(const std::string& s);
RateAgainst rate_against_from_string(const std::string& s);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// OLS of log(mean metric) on log(rate).  Needs >= 3 usable grid points.
RateFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);
RateFit rate_fit(const std::vector<Aggregate>& aggregates, RateMetric metric,
                 RateAgainst against);

struct TailPoint {
  int n = 0;
  double mean = 0.0;
  double se = 0.0;
};

std::vector<TailPoint> tail_curve(const std::vector<Aggregate>& aggregates,
                                  bool beta_metric = false);

}  // namespace rvm
