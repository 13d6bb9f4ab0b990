#pragma once

#include "rvm/gibbs.hpp"
#include "rvm/priors.hpp"
#include "rvm/types.hpp"

namespace rvm {

/// Deterministic grid for integrating over Lambda^2, n <= 3 dimensions.
/// Integration always runs in log(lambda^2) coordinates (midpoint rule);
/// unset bounds default to the prior quantiles at 1e-4 and 1 - 1e-4.
struct GridSpec {
  int nodes_per_dim = 64;
  double lambda_lo = std::numeric_limits<double>::quiet_NaN();
  double lambda_hi = std::numeric_limits<double>::quiet_NaN();
};

struct OracleResult {
  Vector mean_beta;
  Vector mean_Kbeta;
  double trace_var_Kbeta = 0.0;
  double trace_var_beta = 0.0;
  double sigma_sq_mean = 0.0;
  double log_normalizer = 0.0;  // log of the unnormalized posterior mass
  double edge_mass = 0.0;       // weight fraction on boundary nodes
  GridSpec grid;                // resolved bounds actually used
};

/// Brute-force posterior summaries by grid integration of the Lambda^2
/// marginal mixed with the closed-form conditionals.  Throws for n > 3,
/// and when more than 1% of the weight sits on edge nodes (range too
/// narrow).  PointMass priors collapse to a single node.
OracleResult oracle_posterior(const Matrix& K, const Vector& Y,
                              const LocalVariancePrior& prior,
                              const Hyperparams& hyper, const GridSpec& grid);

/// Single-threaded reference implementation (same reduction order, so the
/// two paths agree bit-for-bit).
OracleResult oracle_posterior_serial(const Matrix& K, const Vector& Y,
                                     const LocalVariancePrior& prior,
                                     const Hyperparams& hyper, const GridSpec& grid);

struct RefinedOracle {
  OracleResult coarse;
  OracleResult fine;             // nodes_per_dim doubled
  double rel_change_mean_beta = 0.0;
};

/// Run at N and 2N nodes per dimension and report the relative change.
RefinedOracle oracle_refined(const Matrix& K, const Vector& Y,
                             const LocalVariancePrior& prior,
                             const Hyperparams& hyper, const GridSpec& grid);

/// Unnormalized log posterior weight of one Lambda^2 point, computed the way
/// the oracle computes it (determinant via the symmetrized factorization).
/// Exposed so tests can compare against an independent determinant path.
double oracle_log_weight(const Matrix& K, const Vector& Y,
                         const LocalVariancePrior& prior, const Hyperparams& hyper,
                         const Vector& lambda_sq);

}  // namespace rvm
