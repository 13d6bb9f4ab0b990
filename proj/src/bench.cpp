#include "rvm/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rvm {

std::string to_string(SupportRule r) {
  return r == SupportRule::Uniform ? "uniform" : "first_q";
}

std::string to_string(ValueRule r) {
  switch (r) {
    case ValueRule::FixedSign: return "fixed_sign";
    case ValueRule::UniformNonzero: return "uniform_nonzero";
    case ValueRule::GaussianUnbounded: return "gaussian_unbounded";
  }
  return "?";
}

SupportRule support_rule_from_string(const std::string& s) {
  if (s == "uniform") return SupportRule::Uniform;
  if (s == "first_q") return SupportRule::FirstQ;
  throw ConfigError("unknown support rule: " + s);
}

ValueRule value_rule_from_string(const std::string& s) {
  if (s == "fixed_sign") return ValueRule::FixedSign;
  if (s == "uniform_nonzero") return ValueRule::UniformNonzero;
  if (s == "gaussian_unbounded") return ValueRule::GaussianUnbounded;
  throw ConfigError("unknown value rule: " + s);
}

TrueModel generate_truth(int n, int q_n, double M, double sigma0_sq,
                         SupportRule support_rule, ValueRule value_rule, Rng& rng) {
  if (n < 1 || q_n < 0 || q_n > n)
    throw std::invalid_argument("generate_truth: need 0 <= q_n <= n");
  if (!(M > 0.0) || sigma0_sq < 0.0)
    throw std::invalid_argument("generate_truth: need M > 0 and sigma0_sq >= 0");

  TrueModel truth;
  truth.q_n = q_n;
  truth.M = M;
  truth.sigma0_sq = sigma0_sq;
  truth.beta0 = Vector::Zero(n);
  if (q_n == 0) return truth;

  if (support_rule == SupportRule::FirstQ) {
    truth.support.resize(static_cast<size_t>(q_n));
    std::iota(truth.support.begin(), truth.support.end(), 0);
  } else {
    // Partial Fisher-Yates: first q_n entries of a random permutation.
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < q_n; ++i) {
      const int j = i + static_cast<int>(rng.uniform() * static_cast<double>(n - i));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(std::min(j, n - 1))]);
    }
    truth.support.assign(idx.begin(), idx.begin() + q_n);
    std::sort(truth.support.begin(), truth.support.end());
  }

  for (int k = 0; k < q_n; ++k) {
    double v = 0.0;
    switch (value_rule) {
      case ValueRule::FixedSign:
        v = (k % 2 == 0) ? M : -M;
        break;
      case ValueRule::UniformNonzero:
        do {
          v = M * (2.0 * rng.uniform() - 1.0);
        } while (std::abs(v) < M / 10.0);
        break;
      case ValueRule::GaussianUnbounded:
        v = M * rng.normal();
        break;
    }
    truth.beta0(truth.support[static_cast<size_t>(k)]) = v;
  }
  return truth;
}

Vector simulate_data(const Matrix& K, const TrueModel& truth, Rng& rng) {
  if (K.rows() != K.cols() || K.rows() != truth.beta0.size())
    throw std::invalid_argument("simulate_data: dimension mismatch");
  const int n = static_cast<int>(K.rows());
  Vector y = K * truth.beta0;
  const double sd = std::sqrt(truth.sigma0_sq);
  for (int i = 0; i < n; ++i) y(i) += sd * rng.normal();
  return y;
}

int ExperimentConfig::q_of(int n) const {
  const int q = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), gamma)));
  return std::max(1, std::min(q, n));
}

int ExperimentConfig::p_of(int n) const {
  switch (p_rule.mode) {
    case PRuleMode::Fixed:
      return std::max(1, static_cast<int>(std::lround(p_rule.value)));
    case PRuleMode::TimesN:
      return std::max(1, static_cast<int>(std::ceil(p_rule.value * n)));
    case PRuleMode::Consistency: {
      const double q = static_cast<double>(q_of(n));
      const double target =
          std::pow(q * std::pow(static_cast<double>(n), 1.5), 1.0 / (2.0 * kernel.theta));
      return std::max(n + 1, static_cast<int>(std::ceil(consistency_safety * target)));
    }
  }
  throw std::logic_error("unreachable");
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("bench: n_grid must not be empty");
  for (size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw ConfigError("bench: n_grid entries must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw ConfigError("bench: n_grid must be strictly increasing");
  }
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw ConfigError("bench: gamma must lie in (0, 1) so q_n = o(n)");
  if (replicates < 1) throw ConfigError("bench: replicates must be >= 1");
  kernel.validate();
  chain.validate();
  if (!(M > 0.0) || !(sigma0_sq >= 0.0))
    throw ConfigError("bench: need M > 0 and sigma0_sq >= 0");
}

namespace {

double tail_threshold_kbeta(const ExperimentConfig& cfg, int n, int q, double t2) {
  if (cfg.schedule.regime == ScheduleRegime::PolynomialContraction)
    return static_cast<double>(q) * t2 * t2;
  return static_cast<double>(q) *
         std::log(static_cast<double>(n) / static_cast<double>(q));
}

}  // namespace

CellResult run_cell(const ExperimentConfig& config, int n_index, int replicate) {
  config.validate();
  if (n_index < 0 || n_index >= static_cast<int>(config.n_grid.size()))
    throw std::invalid_argument("run_cell: n_index out of range");
  if (replicate < 0 || replicate >= config.replicates)
    throw std::invalid_argument("run_cell: replicate out of range");

  const int n = config.n_grid[static_cast<size_t>(n_index)];
  const int q = config.q_of(n);
  const int p = config.p_of(n);

  CellResult cell;
  cell.n = n;
  cell.replicate = replicate;
  cell.q = q;
  cell.p = p;
  cell.theta = config.kernel.theta;
  cell.seed = derive_seed(config.root_seed,
                          {0xce11, static_cast<std::uint64_t>(n_index),
                           static_cast<std::uint64_t>(replicate)});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    Rng rng_design(derive_seed(cell.seed, {0}));
    Rng rng_truth(derive_seed(cell.seed, {1}));
    Rng rng_data(derive_seed(cell.seed, {2}));

    const DesignMatrix X =
        generate_design(n, p, config.design_kind, rng_design, config.kernel.theta);
    KernelSpec spec = config.kernel;
    if (config.scale_by_p_theta)
      spec.scale_normalization = std::pow(static_cast<double>(p), spec.theta);
    const KernelMatrix K = build_kernel(X, spec);

    const double nd = static_cast<double>(n);
    double c1 = 1.0 - 1.0 / nd;
    double c2 = 1.0 + 1.0 / nd;
    if (config.cert_rule == CertRule::PThetaInterval) {
      const double pt = std::pow(static_cast<double>(p), spec.theta);
      c1 *= pt;
      c2 *= pt;
    }
    const SpectralCertificate cert = spectral_certificate(K, c1, c2);
    cell.t1 = cert.lambda_min;
    cell.t2 = cert.lambda_max;
    if (!cert.satisfied) {
      cell.flagged = true;
      cell.flag_reason = "certificate";
      cell.err_sq = cell.trace_var = cell.err_sq_beta = cell.trace_var_beta = nan;
      cell.tail_prob = cell.tail_prob_beta = nan;
      return cell;
    }

    const TrueModel truth =
        generate_truth(n, q, config.M, config.sigma0_sq, config.support_rule,
                       config.value_rule, rng_truth);
    const Vector Y = simulate_data(K.entries, truth, rng_data);

    Hyperparams hyper;
    hyper.a = config.a;
    hyper.b = config.b;
    hyper.tau_sq = tau_squared(config.schedule, n, q, cell.t1);
    cell.tau_sq = hyper.tau_sq;

    ChainConfig chain = config.chain;
    chain.seed = derive_seed(cell.seed, {3});
    const Vector Kbeta0 = K.entries * truth.beta0;
    chain.ref_Kbeta = Kbeta0;
    cell.threshold = tail_threshold_kbeta(config, n, q, cell.t2);
    chain.threshold_Kbeta = cell.threshold;
    chain.ref_beta = truth.beta0;
    cell.threshold_beta = std::sqrt(static_cast<double>(q) / (cell.t1 * cell.t1) *
                                    std::pow(nd, 1.5));
    chain.threshold_beta = cell.threshold_beta;

    const ChainSummary summary = run_chain(K.entries, Y, config.prior, hyper, chain);

    cell.err_sq = (summary.rb_mean_Kbeta - Kbeta0).squaredNorm();
    cell.trace_var = summary.trace_var_Kbeta;
    cell.err_sq_beta = (summary.rb_mean_beta - truth.beta0).squaredNorm();
    cell.trace_var_beta = summary.trace_var_beta;
    cell.tail_prob = summary.tail_prob_Kbeta;
    cell.se_tail = summary.se_tail_Kbeta;
    cell.tail_prob_beta = summary.tail_prob_beta;
    cell.se_tail_beta = summary.se_tail_beta;
    cell.sqdist_mean = summary.sqdist_mean_Kbeta;
    cell.se_sqdist = summary.se_sqdist_Kbeta;
    cell.ess_min = summary.ess_min;
    cell.rhat = summary.rhat_max;
    if (config.chain.n_chains >= 2 && !(summary.rhat_max < 1.05)) {
      cell.flagged = true;
      cell.flag_reason = "rhat";
    }
  } catch (const NumericalError& e) {
    cell.flagged = true;
    cell.flag_reason = std::string("numerical: ") + e.what();
    cell.err_sq = cell.trace_var = cell.err_sq_beta = cell.trace_var_beta = nan;
    cell.tail_prob = cell.tail_prob_beta = nan;
  }
  return cell;
}

BenchResult run_bench(const ExperimentConfig& config) {
  config.validate();
  BenchResult result;
  result.config = config;
  const int num_n = static_cast<int>(config.n_grid.size());
  const int total = num_n * config.replicates;
  result.cells.resize(static_cast<size_t>(total));
  // Cells are independent jobs with derived seeds; results land in a fixed
  // slot so the output does not depend on scheduling.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int job = 0; job < total; ++job) {
    const int n_index = job / config.replicates;
    const int replicate = job % config.replicates;
    result.cells[static_cast<size_t>(job)] = run_cell(config, n_index, replicate);
  }
  return result;
}

namespace {

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const size_t r = xs.size();
  if (r == 0) return out;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(r);
  out.mean = m;
  if (r >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    out.se = std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r));
  }
  return out;
}

}  // namespace

std::vector<Aggregate> aggregate_cells(const std::vector<CellResult>& cells) {
  std::vector<int> ns;
  for (const auto& c : cells)
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
  std::sort(ns.begin(), ns.end());

  std::vector<Aggregate> out;
  for (int n : ns) {
    Aggregate agg;
    agg.n = n;
    std::vector<double> err, trv, errb, trvb, tail, tailb, t1s, t2s;
    for (const auto& c : cells) {
      if (c.n != n) continue;
      agg.q = c.q;
      agg.p = c.p;
      agg.tau_sq = c.tau_sq;
      agg.threshold = c.threshold;
      agg.threshold_beta = c.threshold_beta;
      if (c.flagged) {
        ++agg.flagged;
        continue;
      }
      ++agg.usable;
      err.push_back(c.err_sq);
      trv.push_back(c.trace_var);
      errb.push_back(c.err_sq_beta);
      trvb.push_back(c.trace_var_beta);
      tail.push_back(c.tail_prob);
      tailb.push_back(c.tail_prob_beta);
      t1s.push_back(c.t1);
      t2s.push_back(c.t2);
    }
    const MeanSe e = mean_se(err), tv = mean_se(trv), eb = mean_se(errb),
                 tb = mean_se(trvb), ta = mean_se(tail), tab = mean_se(tailb);
    agg.err_sq = e.mean;
    agg.err_sq_se = e.se;
    agg.trace_var = tv.mean;
    agg.trace_var_se = tv.se;
    agg.err_sq_beta = eb.mean;
    agg.err_sq_beta_se = eb.se;
    agg.trace_var_beta = tb.mean;
    agg.trace_var_beta_se = tb.se;
    agg.tail = ta.mean;
    agg.tail_se = ta.se;
    agg.tail_beta = tab.mean;
    agg.tail_beta_se = tab.se;
    agg.t1 = mean_se(t1s).mean;
    agg.t2 = mean_se(t2s).mean;
    if (agg.usable > 0) {
      const double q = static_cast<double>(agg.q);
      const double nd = static_cast<double>(agg.n);
      agg.err_over_q = agg.err_sq / q;
      agg.trace_over_q = agg.trace_var / q;
      agg.err_over_q_t2sq = agg.err_sq / (q * agg.t2 * agg.t2);
      const double logratio = std::log(nd / q);
      agg.err_over_q_logratio =
          logratio > 0.0 ? agg.err_sq / (q * logratio)
                         : std::numeric_limits<double>::quiet_NaN();
      agg.err_beta_normalized = agg.err_sq_beta / agg.threshold_beta;
    }
    out.push_back(std::move(agg));
  }
  return out;
}

std::string to_string(RateMetric m) {
  switch (m) {
    case RateMetric::ErrSq: return "err_sq";
    case RateMetric::TraceVar: return "trace_var";
    case RateMetric::ErrSqBeta: return "err_sq_beta";
    case RateMetric::TraceVarBeta: return "trace_var_beta";
  }
  return "?";
}

std::string to_string(RateAgainst a) {
  return a == RateAgainst::Q ? "q" : "q_t2sq";
}

RateMetric rate_metric_from_string(const std::string& s) {
  if (s == "err_sq") return RateMetric::ErrSq;
  if (s == "trace_var") return RateMetric::TraceVar;
  if (s == "err_sq_beta") return RateMetric::ErrSqBeta;
  if (s == "trace_var_beta") return RateMetric::TraceVarBeta;
  throw ConfigError("unknown rate metric: " + s);
}

RateAgainst rate_against_from_string(const std::string& s) {
  if (s == "q") return RateAgainst::Q;
  if (s == "q_t2sq") return RateAgainst::QT2Sq;
  throw ConfigError("unknown rate base: " + s);
}

RateFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("fit_loglog: size mismatch");
  if (xs.size() < 3)
    throw ConfigError("fit_loglog: need at least 3 points, have " +
                      std::to_string(xs.size()));
  const size_t m = xs.size();
  std::vector<double> lx(m), ly(m);
  for (size_t i = 0; i < m; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog: values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog: degenerate x values");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = static_cast<int>(m);
  return fit;
}

RateFit rate_fit(const std::vector<Aggregate>& aggregates, RateMetric metric,
                 RateAgainst against) {
  std::vector<double> xs, ys;
  for (const auto& a : aggregates) {
    if (a.usable < 1) continue;
    double y = 0.0;
    switch (metric) {
      case RateMetric::ErrSq: y = a.err_sq; break;
      case RateMetric::TraceVar: y = a.trace_var; break;
      case RateMetric::ErrSqBeta: y = a.err_sq_beta; break;
      case RateMetric::TraceVarBeta: y = a.trace_var_beta; break;
    }
    const double q = static_cast<double>(a.q);
    const double x = against == RateAgainst::Q ? q : q * a.t2 * a.t2;
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.size() < 3)
    throw ConfigError("rate_fit: fewer than 3 usable grid points (" +
                      std::to_string(xs.size()) + ")");
  return fit_loglog(xs, ys);
}

std::vector<TailPoint> tail_curve(const std::vector<Aggregate>& aggregates,
                                  bool beta_metric) {
  std::vector<TailPoint> out;
  for (const auto& a : aggregates) {
    if (a.usable < 1) continue;
    TailPoint pt;
    pt.n = a.n;
    pt.mean = beta_metric ? a.tail_beta : a.tail;
    pt.se = beta_metric ? a.tail_beta_se : a.tail_se;
    out.push_back(pt);
  }
  return out;
}

}  // namespace rvm
