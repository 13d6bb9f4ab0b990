#pragma once

#include <optional>
#include <vector>

#include "rvm/priors.hpp"
#include "rvm/rng.hpp"
#include "rvm/types.hpp"

namespace rvm {

/// sigma^2 ~ InverseGamma(a/2, b/2) plus the fixed global parameter for the run.
struct Hyperparams {
  double a = 1.0;
  double b = 1.0;
  double tau_sq = 1.0;

  void validate(int n) const {
    if (!(a > 0.0) || !(b > 0.0) || !(tau_sq > 0.0))
      throw std::invalid_argument("Hyperparams: a, b, tau_sq must be > 0");
    if (!(static_cast<double>(n) + a > 2.0))
      throw std::invalid_argument("Hyperparams: posterior mean needs n + a > 2");
  }
};

struct GibbsState {
  Vector beta;
  double sigma_sq = 1.0;
  Vector lambda_sq;
};

struct InverseGammaParams {
  double shape = 0.0;
  double scale = 0.0;
};

/// Gaussian conditional of beta given (sigma^2, Lambda^2): mean
/// m = A^-1 K Y and covariance sigma^2 A^-1 with A = K^2 + tau^-2 Lambda^-2.
/// The Cholesky factor of A is retained for covariance draws and traces.
struct BetaConditional {
  Vector mean;
  Eigen::LLT<Matrix> chol;   // factor of A (jitter included if applied)
  double sigma_sq = 1.0;     // sigma^2 supplied at construction
  double jitter = 0.0;       // diagonal jitter added on retry, 0 if none
};

BetaConditional beta_conditional(const Matrix& K, const Vector& Y, double sigma_sq,
                                 const Vector& lambda_sq, double tau_sq);

/// Fast path used by the sweep: K^2 and K*Y precomputed.
BetaConditional beta_conditional_pre(const Matrix& K2, const Vector& KY,
                                     double sigma_sq, const Vector& lambda_sq,
                                     double tau_sq);

/// Exact draw from N(mean, sigma_sq * A^-1).
Vector draw_beta(const BetaConditional& cond, double sigma_sq, Rng& rng);

/// Full conditional of sigma^2 given beta:
/// InverseGamma(n + a/2, (b + beta' tau^-2 Lambda^-2 beta + |Y - K beta|^2)/2).
InverseGammaParams sigma_sq_conditional_given_beta(const Matrix& K, const Vector& Y,
                                                   const Vector& beta,
                                                   const Vector& lambda_sq,
                                                   double tau_sq,
                                                   const Hyperparams& hyper);

struct MarginalSigma {
  InverseGammaParams ig;   // shape (n+a)/2, scale (b + quad_form)/2
  double quad_form = 0.0;  // Y'(I - K A^-1 K)Y, >= 0 analytically
  double cond_mean = 0.0;  // E(sigma^2 | Lambda^2, Y) = 2*scale/(n+a-2)
};

/// Conditional of sigma^2 given Lambda^2 only (beta integrated out).
MarginalSigma sigma_sq_marginal_conditional(const Matrix& K, const Vector& Y,
                                            const Vector& lambda_sq, double tau_sq,
                                            const Hyperparams& hyper);

/// One draw of lambda_i^2 given (beta_i, sigma^2).  Conjugate where available:
/// InverseGamma(s,d) -> InverseGamma(s+1/2, d + beta_i^2/(2 sigma^2 tau^2)),
/// Gamma(s,r) -> GIG(s-1/2, 2r, beta_i^2/(sigma^2 tau^2)),
/// InverseGaussian(mu,l) -> GIG(-1, l/mu^2, l + beta_i^2/(sigma^2 tau^2));
/// otherwise a slice-sampling step on log lambda^2.
double lambda_sq_conditional(const LocalVariancePrior& prior, double beta_i,
                             double sigma_sq, double tau_sq, double current,
                             Rng& rng);

/// One slice-sampling step (Neal's doubling procedure) for a log-density f,
/// starting from x0 with initial width w.  Throws NumericalError if the
/// doubling phase exceeds max_doublings.
double slice_sample_step(const std::function<double(double)>& logf, double x0,
                         double w, int max_doublings, Rng& rng);

enum class SweepKind {
  Collapsed,        // sigma^2 from the Lambda-marginal, then beta | sigma^2
  FullConditional,  // beta | sigma^2, then sigma^2 | beta
};

struct ChainConfig {
  int n_iter = 5000;
  int burn_in = 1000;
  int thin = 1;
  int n_chains = 2;
  std::uint64_t seed = 0;
  SweepKind sweep = SweepKind::Collapsed;
  // Optional references for posterior tail probabilities.
  std::optional<Vector> ref_Kbeta;     // typically K * beta0
  double threshold_Kbeta = 0.0;        // on |K beta - ref|^2
  std::optional<Vector> ref_beta;      // typically beta0
  double threshold_beta = 0.0;         // on |beta - ref|^2

  void validate() const {
    if (n_iter <= burn_in || burn_in < 0 || thin < 1 || n_chains < 1)
      throw std::invalid_argument("ChainConfig: need n_iter > burn_in >= 0, thin >= 1, n_chains >= 1");
  }
};

/// Rao-Blackwellized posterior summaries pooled over all chains.
struct ChainSummary {
  Vector rb_mean_Kbeta;       // mean of K A^-1 K Y over retained Lambda draws
  Vector rb_mean_beta;        // mean of A^-1 K Y
  Vector rb_se_beta;          // MC s.e. per coordinate of rb_mean_beta (ESS-adjusted)
  Vector draw_mean_beta;      // plain average of the beta draws
  Vector draw_se_beta;        // MC s.e. per coordinate of draw_mean_beta
  double trace_var_Kbeta = 0.0;  // E-part + V-part of the total-variance split
  double trace_var_beta = 0.0;
  double sigma_sq_mean = 0.0;
  double sigma_sq_se = 0.0;
  double sqdist_mean_Kbeta = 0.0;  // E(|K beta - ref|^2 | Y) estimate (needs ref)
  double se_sqdist_Kbeta = 0.0;
  double tail_prob_Kbeta = std::numeric_limits<double>::quiet_NaN();
  double se_tail_Kbeta = 0.0;
  double tail_prob_beta = std::numeric_limits<double>::quiet_NaN();
  double se_tail_beta = 0.0;
  double ess_min = 0.0;       // min effective sample size across coordinates
  double rhat_max = std::numeric_limits<double>::quiet_NaN();  // max split-Rhat
  long n_kept = 0;
  bool degenerate_variance = false;  // some coordinate had zero sample variance
};

/// Optional trace capture (retained iterations of the first chain).
struct TraceSink {
  std::vector<double> sigma_sq;
  std::vector<Vector> beta;
};

/// Blocked Gibbs sweep per iteration (Collapsed):
///   1. sigma^2 from its Lambda-marginal conditional,
///   2. beta from its Gaussian conditional,
///   3. each lambda_i^2 from its conjugate / slice conditional.
/// Deterministic given (inputs, config.seed).
ChainSummary run_chain(const Matrix& K, const Vector& Y,
                       const LocalVariancePrior& prior, const Hyperparams& hyper,
                       const ChainConfig& config, TraceSink* trace = nullptr);

/// Effective sample size of one series (Geyer initial positive/monotone
/// sequence).  Degenerate (zero-variance) series report ESS = length.
struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};
EssResult effective_sample_size(const std::vector<double>& series);

/// Potential scale reduction over >= 2 sequences with the finite-sample
/// correction, clamped below at 1 (identical sequences give exactly 1).
double potential_scale_reduction(const std::vector<std::vector<double>>& sequences);

/// Split-Rhat: each chain halved, then potential_scale_reduction.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace rvm
