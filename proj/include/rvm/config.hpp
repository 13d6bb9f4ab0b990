#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvm/bench.hpp"
#include "rvm/io.hpp"
#include "rvm/oracle.hpp"

namespace rvm {

/// Fully resolved run configuration.  Parsed from a JSON file with strict
/// key checking (unknown keys are a hard error) plus scalar CLI overrides;
/// every run writes the resolved form next to its outputs and the written
/// form re-parses to an equal configuration.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 0;  // 0 = available parallelism
  int verbosity = 1;

  struct DesignSection {
    std::string kind = "separated";
    int n = 50;
    int p = 50;
    double theta = 1.0;
    std::string csv;  // read the design from CSV instead of generating
  } design;

  struct KernelSection {
    std::string family = "gaussian";
    double theta = 1.0;
    double scale = 1.0;
    bool scale_p_theta = false;  // scale = p^theta, resolved at run time
  } kernel;

  std::string prior = "inverse_gamma(3.0, 1.0)";

  struct HyperSection {
    double a = 1.0;
    double b = 1.0;
  } hyper;

  struct ScheduleSection {
    std::string regime = "bounded_kernel";
    double c = 1.0;
    double delta = 1.0;
  } schedule;

  struct ChainSection {
    int n_iter = 5000;
    int burn_in = 1000;
    int thin = 1;
    int n_chains = 2;
    std::string sweep = "collapsed";
    bool dump_trace = false;
  } chain;

  struct TruthSection {
    double gamma = 0.5;
    int q = -1;  // -1: use ceil(n^gamma)
    double M = 2.0;
    double sigma0_sq = 1.0;
    std::string support_rule = "uniform";
    std::string value_rule = "fixed_sign";
  } truth;

  struct BenchSection {
    std::vector<int> n_grid{50, 100, 200, 400};
    int replicates = 16;
    std::string p_rule = "times_n:1";  // fixed:<p> | times_n:<x> | consistency
    std::string cert_rule = "unit";    // unit | p_theta
    double consistency_safety = 4.0;
  } bench;

  struct OracleSection {
    int nodes_per_dim = 64;
    double lambda_lo = std::numeric_limits<double>::quiet_NaN();
    double lambda_hi = std::numeric_limits<double>::quiet_NaN();
    bool refine = true;
  } oracle;

  struct ChecksSection {
    double c1 = std::numeric_limits<double>::quiet_NaN();  // NaN: 1 -/+ 1/n
    double c2 = std::numeric_limits<double>::quiet_NaN();
    bool separation = false;
    bool orthogonality = false;
    double a_L = 0.6;
    double a_U = 2.0;
  } checks;

  struct DataSection {
    std::string y_csv;
    std::string design_csv;
  } data;

  struct RateFitSection {
    std::string metric = "err_sq";
    std::string against = "q";
    double max_slope = std::numeric_limits<double>::quiet_NaN();
  } rate_fit;

  Json to_json() const;

  // Typed views over the raw sections.
  LocalVariancePrior prior_object() const { return LocalVariancePrior::parse(prior); }
  GlobalSchedule schedule_object() const;
  ChainConfig chain_object() const;
  ExperimentConfig experiment_object() const;
  GridSpec grid_object() const;
  KernelSpec kernel_object(int p) const;
};

/// Strict parse: every key must be known, every value well-typed.
RunConfig config_from_json(const Json& j);

/// Load a config file (or defaults when path is empty) and apply
/// KEY=VALUE overrides on scalar keys (dotted paths, e.g. chain.n_iter=200).
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

}  // namespace rvm
