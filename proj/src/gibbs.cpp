#include "rvm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace rvm {

namespace {

Matrix symmetric_square(const Matrix& K) {
  const int n = static_cast<int>(K.rows());
  Matrix K2 = Matrix::Zero(n, n);
  K2.selfadjointView<Eigen::Lower>().rankUpdate(K);
  K2.triangularView<Eigen::Upper>() = K2.transpose();
  return K2;
}

void check_kernel_input(const Matrix& K, const Vector& Y) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("gibbs: kernel matrix must be square");
  if (K.rows() != Y.size())
    throw std::invalid_argument("gibbs: Y length must match kernel size");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("gibbs: kernel matrix must be symmetric");
}

void check_variances(const Vector& lambda_sq, double tau_sq) {
  if (!(tau_sq > 0.0))
    throw std::invalid_argument("gibbs: tau_sq must be > 0");
  if (lambda_sq.size() == 0 || !(lambda_sq.minCoeff() > 0.0) || !lambda_sq.allFinite())
    throw std::invalid_argument("gibbs: lambda_sq entries must be positive and finite");
}

}  // namespace

BetaConditional beta_conditional_pre(const Matrix& K2, const Vector& KY,
                                     double sigma_sq, const Vector& lambda_sq,
                                     double tau_sq) {
  check_variances(lambda_sq, tau_sq);
  if (!(sigma_sq > 0.0))
    throw std::invalid_argument("gibbs: sigma_sq must be > 0");
  const int n = static_cast<int>(K2.rows());
  Matrix A = K2;
  A.diagonal() += (1.0 / (tau_sq * lambda_sq.array())).matrix();

  BetaConditional cond;
  cond.sigma_sq = sigma_sq;
  cond.chol.compute(A);
  if (cond.chol.info() != Eigen::Success) {
    // One shot of diagonal jitter, then a hard error; silent regularization
    // beyond this is forbidden.
    cond.jitter = 1e-10 * A.trace() / static_cast<double>(n);
    A.diagonal().array() += cond.jitter;
    cond.chol.compute(A);
    if (cond.chol.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "beta_conditional: SPD factorization failed twice (n=" << n
          << ", trace=" << A.trace() << ", min diag=" << A.diagonal().minCoeff()
          << ", max diag=" << A.diagonal().maxCoeff() << ", jitter=" << cond.jitter
          << ")";
      throw NumericalError(msg.str());
    }
  }
  cond.mean = cond.chol.solve(KY);
  return cond;
}

BetaConditional beta_conditional(const Matrix& K, const Vector& Y, double sigma_sq,
                                 const Vector& lambda_sq, double tau_sq) {
  check_kernel_input(K, Y);
  return beta_conditional_pre(symmetric_square(K), K * Y, sigma_sq, lambda_sq, tau_sq);
}

Vector draw_beta(const BetaConditional& cond, double sigma_sq, Rng& rng) {
  if (!(sigma_sq >= 0.0))
    throw std::invalid_argument("draw_beta: sigma_sq must be >= 0");
  const int n = static_cast<int>(cond.mean.size());
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  // cov = sigma^2 A^-1 = sigma^2 L^-T L^-1, so the factor is L^-T.
  Vector x = cond.chol.matrixU().solve(z);
  return cond.mean + std::sqrt(sigma_sq) * x;
}

InverseGammaParams sigma_sq_conditional_given_beta(const Matrix& K, const Vector& Y,
                                                   const Vector& beta,
                                                   const Vector& lambda_sq,
                                                   double tau_sq,
                                                   const Hyperparams& hyper) {
  check_kernel_input(K, Y);
  check_variances(lambda_sq, tau_sq);
  const int n = static_cast<int>(Y.size());
  const double prior_quad =
      (beta.array().square() / (tau_sq * lambda_sq.array())).sum();
  const double resid = (Y - K * beta).squaredNorm();
  return InverseGammaParams{static_cast<double>(n) + hyper.a / 2.0,
                            (hyper.b + prior_quad + resid) / 2.0};
}

MarginalSigma sigma_sq_marginal_conditional(const Matrix& K, const Vector& Y,
                                            const Vector& lambda_sq, double tau_sq,
                                            const Hyperparams& hyper) {
  check_kernel_input(K, Y);
  const int n = static_cast<int>(Y.size());
  hyper.validate(n);
  BetaConditional cond = beta_conditional(K, Y, 1.0, lambda_sq, tau_sq);
  const Vector KY = K * Y;
  const double yty = Y.squaredNorm();
  double quad = yty - KY.dot(cond.mean);
  if (quad < -1e-9 * std::max(1.0, yty))
    throw NumericalError("sigma_sq_marginal_conditional: quadratic form " +
                         std::to_string(quad) + " < 0");
  quad = std::max(quad, 0.0);
  MarginalSigma out;
  out.quad_form = quad;
  out.ig = InverseGammaParams{(static_cast<double>(n) + hyper.a) / 2.0,
                              (hyper.b + quad) / 2.0};
  out.cond_mean = (hyper.b + quad) / (static_cast<double>(n) + hyper.a - 2.0);
  return out;
}

double slice_sample_step(const std::function<double(double)>& logf, double x0,
                         double w, int max_doublings, Rng& rng) {
  const double f0 = logf(x0);
  if (!std::isfinite(f0))
    throw NumericalError("slice_sample_step: log-density not finite at start x0=" +
                         std::to_string(x0));
  const double logy = f0 + std::log(rng.uniform());

  double L = x0 - w * rng.uniform();
  double R = L + w;
  double fL = logf(L);
  double fR = logf(R);
  int k = max_doublings;
  while (k > 0 && (fL > logy || fR > logy)) {
    if (rng.uniform() < 0.5) {
      L -= (R - L);
      fL = logf(L);
    } else {
      R += (R - L);
      fR = logf(R);
    }
    --k;
  }
  if (fL > logy || fR > logy) {
    std::ostringstream msg;
    msg << "slice_sample_step: exceeded " << max_doublings
        << " doublings (x0=" << x0 << ", logy=" << logy << ", L=" << L
        << ", R=" << R << ")";
    throw NumericalError(msg.str());
  }

  // Doubling acceptance test (keeps the stationary distribution exact).
  const auto acceptable = [&](double x1, double lo, double hi) {
    bool differ = false;
    while (hi - lo > 1.1 * w) {
      const double mid = 0.5 * (lo + hi);
      if ((x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid)) differ = true;
      if (x1 < mid)
        hi = mid;
      else
        lo = mid;
      if (differ && logy >= logf(lo) && logy >= logf(hi)) return false;
    }
    return true;
  };

  for (int it = 0; it < 1000; ++it) {
    const double x1 = L + rng.uniform() * (R - L);
    if (logf(x1) >= logy && acceptable(x1, L, R)) return x1;
    if (x1 < x0)
      L = x1;
    else
      R = x1;
  }
  throw NumericalError("slice_sample_step: shrinkage did not terminate");
}

double lambda_sq_conditional(const LocalVariancePrior& prior, double beta_i,
                             double sigma_sq, double tau_sq, double current,
                             Rng& rng) {
  if (!(sigma_sq > 0.0) || !(tau_sq > 0.0))
    throw std::invalid_argument("lambda_sq_conditional: variances must be > 0");
  const double c = beta_i * beta_i / (2.0 * sigma_sq * tau_sq);
  switch (prior.family()) {
    case PriorFamily::PointMass:
      return prior.param1();
    case PriorFamily::InverseGamma:
      return rng.inverse_gamma(prior.param1() + 0.5, prior.param2() + c);
    case PriorFamily::Gamma:
      return gig_draw(rng, prior.param1() - 0.5, 2.0 * prior.param2(), 2.0 * c);
    case PriorFamily::InverseGaussian: {
      const double mu = prior.param1();
      const double l = prior.param2();
      return gig_draw(rng, -1.0, l / (mu * mu), l + 2.0 * c);
    }
    case PriorFamily::BetaPrime:
      break;  // slice sampling below
  }
  if (!(current > 0.0))
    throw std::invalid_argument("lambda_sq_conditional: current must be > 0");
  // Slice step on z = log lambda^2; the Jacobian contributes +z, the
  // (lambda^2)^(-1/2) factor -z/2.
  const auto logt = [&](double z) {
    return prior.log_density(std::exp(z)) + 0.5 * z - c * std::exp(-z);
  };
  const double z1 = slice_sample_step(logt, std::log(current), 1.0, 100, rng);
  return std::exp(z1);
}

// ---------------------------------------------------------------------------
// Chain runner
// ---------------------------------------------------------------------------

namespace {

struct ChainStore {
  Matrix m;       // kept x n, conditional means
  Matrix km;      // kept x n
  Matrix beta;    // kept x n, draws
  Vector sigma;   // kept
  Vector cond_mean_sigma;
  Vector tr_kak;  // tr(K A^-1 K)
  Vector tr_ainv;
  Vector e_kbeta;  // per-draw estimate of E(|K beta - ref|^2 | Lambda, Y)
  Vector e_beta;
  std::vector<char> ind_kbeta;
  std::vector<char> ind_beta;
};

std::vector<double> column_of(const Matrix& mat, int col) {
  std::vector<double> v(static_cast<size_t>(mat.rows()));
  for (Eigen::Index t = 0; t < mat.rows(); ++t) v[static_cast<size_t>(t)] = mat(t, col);
  return v;
}

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

double pooled_sd(const std::vector<const Vector*>& parts) {
  long total = 0;
  double mean = 0.0;
  for (const Vector* p : parts) {
    total += p->size();
    mean += p->sum();
  }
  if (total < 2) return 0.0;
  mean /= static_cast<double>(total);
  double ss = 0.0;
  for (const Vector* p : parts) ss += (p->array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(total - 1));
}

// Sum of per-chain ESS for one scalar functional stored per chain.
double total_ess(const std::vector<std::vector<double>>& per_chain, bool* degenerate) {
  double total = 0.0;
  for (const auto& s : per_chain) {
    const EssResult r = effective_sample_size(s);
    if (r.degenerate && degenerate != nullptr) *degenerate = true;
    total += r.ess;
  }
  return total;
}

struct ScalarSummary {
  double mean = 0.0;
  double se = 0.0;
};

ScalarSummary summarize_scalar(const std::vector<const Vector*>& parts,
                               const std::vector<std::vector<double>>& series,
                               bool* degenerate) {
  ScalarSummary out;
  long total = 0;
  for (const Vector* p : parts) {
    out.mean += p->sum();
    total += p->size();
  }
  out.mean /= static_cast<double>(total);
  const double sd = pooled_sd(parts);
  const double ess = std::max(1.0, total_ess(series, degenerate));
  out.se = sd / std::sqrt(ess);
  return out;
}

}  // namespace

ChainSummary run_chain(const Matrix& K, const Vector& Y,
                       const LocalVariancePrior& prior, const Hyperparams& hyper,
                       const ChainConfig& config, TraceSink* trace) {
  check_kernel_input(K, Y);
  config.validate();
  const int n = static_cast<int>(Y.size());
  hyper.validate(n);
  if (config.ref_Kbeta && config.ref_Kbeta->size() != n)
    throw std::invalid_argument("run_chain: ref_Kbeta has wrong length");
  if (config.ref_beta && config.ref_beta->size() != n)
    throw std::invalid_argument("run_chain: ref_beta has wrong length");

  const Matrix K2 = symmetric_square(K);
  const Vector KY = K * Y;
  const double yty = Y.squaredNorm();
  const double tau_sq = hyper.tau_sq;
  const double nad = static_cast<double>(n) + hyper.a;
  const int kept_per_chain = (config.n_iter - config.burn_in + config.thin - 1) / config.thin;
  const Matrix eye = Matrix::Identity(n, n);

  std::vector<ChainStore> stores(static_cast<size_t>(config.n_chains));

  for (int c = 0; c < config.n_chains; ++c) {
    Rng rng(derive_seed(config.seed, {0x11, static_cast<std::uint64_t>(c)}));
    ChainStore& st = stores[static_cast<size_t>(c)];
    st.m.resize(kept_per_chain, n);
    st.km.resize(kept_per_chain, n);
    st.beta.resize(kept_per_chain, n);
    st.sigma.resize(kept_per_chain);
    st.cond_mean_sigma.resize(kept_per_chain);
    st.tr_kak.resize(kept_per_chain);
    st.tr_ainv.resize(kept_per_chain);
    st.e_kbeta.resize(kept_per_chain);
    st.e_beta.resize(kept_per_chain);
    st.ind_kbeta.assign(static_cast<size_t>(kept_per_chain), 0);
    st.ind_beta.assign(static_cast<size_t>(kept_per_chain), 0);

    Vector lambda_sq(n);
    for (int i = 0; i < n; ++i) lambda_sq(i) = prior.sample(rng);
    double sigma_sq = 1.0;
    int kept = 0;

    for (int t = 0; t < config.n_iter; ++t) {
      BetaConditional cond;
      double quad = 0.0;
      try {
        cond = beta_conditional_pre(K2, KY, std::max(sigma_sq, 1e-300), lambda_sq, tau_sq);
        quad = yty - KY.dot(cond.mean);
        if (quad < -1e-9 * std::max(1.0, yty))
          throw NumericalError("negative marginal quadratic form " + std::to_string(quad));
        quad = std::max(quad, 0.0);

        Vector beta;
        if (config.sweep == SweepKind::Collapsed) {
          sigma_sq = 1.0 / rng.gamma(nad / 2.0, (hyper.b + quad) / 2.0);
          beta = draw_beta(cond, sigma_sq, rng);
        } else {
          beta = draw_beta(cond, sigma_sq, rng);
          const double prior_quad =
              (beta.array().square() / (tau_sq * lambda_sq.array())).sum();
          const double resid = (Y - K * beta).squaredNorm();
          sigma_sq = 1.0 / rng.gamma(static_cast<double>(n) + hyper.a / 2.0,
                                     (hyper.b + prior_quad + resid) / 2.0);
        }

        const bool retain = t >= config.burn_in && (t - config.burn_in) % config.thin == 0;
        if (retain) {
          const Vector km = K * cond.mean;
          const double cms = (hyper.b + quad) / (nad - 2.0);
          // tr(A^-1 K^2) = n - tr(A^-1 D) with D the diagonal added to K^2.
          const Matrix linv = cond.chol.matrixL().solve(eye);
          const double tr_ainv = linv.squaredNorm();
          double tr_ainv_d = 0.0;
          for (int i = 0; i < n; ++i) {
            const double d = 1.0 / (tau_sq * lambda_sq(i)) + cond.jitter;
            tr_ainv_d += d * linv.col(i).squaredNorm();
          }
          const double tr_kak = static_cast<double>(n) - tr_ainv_d;

          st.m.row(kept) = cond.mean.transpose();
          st.km.row(kept) = km.transpose();
          st.beta.row(kept) = beta.transpose();
          st.sigma(kept) = sigma_sq;
          st.cond_mean_sigma(kept) = cms;
          st.tr_kak(kept) = tr_kak;
          st.tr_ainv(kept) = tr_ainv;
          if (config.ref_Kbeta) {
            st.e_kbeta(kept) = cms * tr_kak + (km - *config.ref_Kbeta).squaredNorm();
            st.ind_kbeta[static_cast<size_t>(kept)] =
                ((K * beta) - *config.ref_Kbeta).squaredNorm() >= config.threshold_Kbeta;
          }
          if (config.ref_beta) {
            st.e_beta(kept) = cms * tr_ainv + (cond.mean - *config.ref_beta).squaredNorm();
            st.ind_beta[static_cast<size_t>(kept)] =
                (beta - *config.ref_beta).squaredNorm() >= config.threshold_beta;
          }
          if (trace != nullptr && c == 0) {
            trace->sigma_sq.push_back(sigma_sq);
            trace->beta.push_back(beta);
          }
          ++kept;
        }

        for (int i = 0; i < n; ++i)
          lambda_sq(i) =
              lambda_sq_conditional(prior, beta(i), sigma_sq, tau_sq, lambda_sq(i), rng);
      } catch (const NumericalError& e) {
        throw NumericalError("chain " + std::to_string(c) + " iteration " +
                             std::to_string(t) + ": " + e.what());
      }
    }
  }

  // ---- pooled summaries (fixed order: chain 0, 1, ... then iteration) ----
  ChainSummary out;
  const long total_kept = static_cast<long>(config.n_chains) * kept_per_chain;
  out.n_kept = total_kept;

  Vector sum_m = Vector::Zero(n), sum_km = Vector::Zero(n);
  double sum_e_part_k = 0.0, sum_e_part_b = 0.0;
  for (const auto& st : stores) {
    sum_m += st.m.colwise().sum().transpose();
    sum_km += st.km.colwise().sum().transpose();
    sum_e_part_k += (st.cond_mean_sigma.array() * st.tr_kak.array()).sum();
    sum_e_part_b += (st.cond_mean_sigma.array() * st.tr_ainv.array()).sum();
  }
  out.rb_mean_beta = sum_m / static_cast<double>(total_kept);
  out.rb_mean_Kbeta = sum_km / static_cast<double>(total_kept);

  // V-part of the total-variance split: per-coordinate sample variance of the
  // conditional means over retained draws.
  double vpart_k = 0.0, vpart_b = 0.0;
  if (total_kept > 1) {
    for (const auto& st : stores) {
      vpart_k += (st.km.rowwise() - out.rb_mean_Kbeta.transpose()).squaredNorm();
      vpart_b += (st.m.rowwise() - out.rb_mean_beta.transpose()).squaredNorm();
    }
    vpart_k /= static_cast<double>(total_kept - 1);
    vpart_b /= static_cast<double>(total_kept - 1);
  }
  out.trace_var_Kbeta = sum_e_part_k / static_cast<double>(total_kept) + vpart_k;
  out.trace_var_beta = sum_e_part_b / static_cast<double>(total_kept) + vpart_b;

  bool degenerate = false;

  // sigma^2 moments.
  {
    std::vector<const Vector*> parts;
    std::vector<std::vector<double>> series;
    for (const auto& st : stores) {
      parts.push_back(&st.sigma);
      series.push_back(to_std(st.sigma));
    }
    const ScalarSummary s = summarize_scalar(parts, series, &degenerate);
    out.sigma_sq_mean = s.mean;
    out.sigma_sq_se = s.se;
  }

  // Per-coordinate MC s.e. of the Rao-Blackwellized beta mean and the
  // minimum ESS across beta coordinates.
  out.rb_se_beta.resize(n);
  out.draw_mean_beta.resize(n);
  out.draw_se_beta.resize(n);
  double ess_min = std::numeric_limits<double>::infinity();
  double rhat_max = 1.0;
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<double>> m_series, b_series;
    std::vector<Vector> m_cols, b_cols;
    m_cols.reserve(stores.size());
    b_cols.reserve(stores.size());
    for (const auto& st : stores) {
      m_series.push_back(column_of(st.m, i));
      b_series.push_back(column_of(st.beta, i));
      m_cols.emplace_back(st.m.col(i));
      b_cols.emplace_back(st.beta.col(i));
    }
    std::vector<const Vector*> parts;
    for (const auto& v : m_cols) parts.push_back(&v);
    const double sd = pooled_sd(parts);
    const double ess_m = std::max(1.0, total_ess(m_series, &degenerate));
    out.rb_se_beta(i) = sd / std::sqrt(ess_m);

    double bsum = 0.0;
    for (const auto& v : b_cols) bsum += v.sum();
    out.draw_mean_beta(i) = bsum / static_cast<double>(total_kept);
    std::vector<const Vector*> bparts;
    for (const auto& v : b_cols) bparts.push_back(&v);
    bool deg_b = false;
    const double ess_b = total_ess(b_series, &deg_b);
    out.draw_se_beta(i) = pooled_sd(bparts) / std::sqrt(std::max(1.0, ess_b));
    if (deg_b) degenerate = true;
    ess_min = std::min(ess_min, ess_b);
    if (config.n_chains >= 2) rhat_max = std::max(rhat_max, split_rhat(b_series));
  }
  {
    std::vector<std::vector<double>> s_series;
    for (const auto& st : stores) s_series.push_back(to_std(st.sigma));
    bool deg_s = false;
    ess_min = std::min(ess_min, total_ess(s_series, &deg_s));
    if (deg_s) degenerate = true;
    if (config.n_chains >= 2) rhat_max = std::max(rhat_max, split_rhat(s_series));
  }
  out.ess_min = ess_min;
  out.rhat_max = config.n_chains >= 2 ? rhat_max
                                      : std::numeric_limits<double>::quiet_NaN();

  if (config.ref_Kbeta) {
    std::vector<const Vector*> parts;
    std::vector<std::vector<double>> series, ind_series;
    for (const auto& st : stores) {
      parts.push_back(&st.e_kbeta);
      series.push_back(to_std(st.e_kbeta));
      ind_series.emplace_back(st.ind_kbeta.begin(), st.ind_kbeta.end());
    }
    const ScalarSummary s = summarize_scalar(parts, series, &degenerate);
    out.sqdist_mean_Kbeta = s.mean;
    out.se_sqdist_Kbeta = s.se;

    double hits = 0.0;
    for (const auto& st : stores)
      for (char v : st.ind_kbeta) hits += v;
    const double phat = hits / static_cast<double>(total_kept);
    bool deg_i = false;
    const double ess_i = std::max(1.0, total_ess(ind_series, &deg_i));
    out.tail_prob_Kbeta = phat;
    out.se_tail_Kbeta = std::sqrt(std::max(phat * (1.0 - phat), 0.0) / ess_i);
  }
  if (config.ref_beta) {
    double hits = 0.0;
    std::vector<std::vector<double>> ind_series;
    for (const auto& st : stores) {
      for (char v : st.ind_beta) hits += v;
      ind_series.emplace_back(st.ind_beta.begin(), st.ind_beta.end());
    }
    const double phat = hits / static_cast<double>(total_kept);
    bool deg_i = false;
    const double ess_i = std::max(1.0, total_ess(ind_series, &deg_i));
    out.tail_prob_beta = phat;
    out.se_tail_beta = std::sqrt(std::max(phat * (1.0 - phat), 0.0) / ess_i);
  }

  out.degenerate_variance = degenerate;
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

EssResult effective_sample_size(const std::vector<double>& series) {
  const long T = static_cast<long>(series.size());
  if (T < 4) return {static_cast<double>(T), true};
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(T);
  double c0 = 0.0;
  for (double x : series) c0 += (x - mean) * (x - mean);
  c0 /= static_cast<double>(T);
  const double scale = std::max(1.0, mean * mean);
  if (!(c0 > 0.0) || c0 < 1e-300 * scale) return {static_cast<double>(T), true};

  const auto gamma_k = [&](long k) {
    double s = 0.0;
    for (long t = 0; t + k < T; ++t)
      s += (series[static_cast<size_t>(t)] - mean) *
           (series[static_cast<size_t>(t + k)] - mean);
    return s / static_cast<double>(T);
  };

  // Geyer initial monotone positive sequence over lag pairs.
  double sum_pairs = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (long m = 0; 2 * m + 1 < T; ++m) {
    double g = gamma_k(2 * m) + gamma_k(2 * m + 1);
    if (g <= 0.0) break;
    g = std::min(g, prev);
    prev = g;
    sum_pairs += g;
  }
  double tau = 2.0 * sum_pairs / c0 - 1.0;
  tau = std::max(tau, 0.1);  // antithetic chains can dip below 1
  const double ess = std::min(static_cast<double>(T) / tau, 10.0 * static_cast<double>(T));
  return {ess, false};
}

double potential_scale_reduction(const std::vector<std::vector<double>>& sequences) {
  if (sequences.size() < 2)
    throw std::invalid_argument("potential_scale_reduction: need >= 2 sequences");
  size_t T = std::numeric_limits<size_t>::max();
  for (const auto& s : sequences) T = std::min(T, s.size());
  if (T < 2)
    throw std::invalid_argument("potential_scale_reduction: sequences too short");
  const double Td = static_cast<double>(T);
  const size_t C = sequences.size();

  double grand = 0.0;
  std::vector<double> means(C, 0.0), vars(C, 0.0);
  for (size_t c = 0; c < C; ++c) {
    for (size_t t = 0; t < T; ++t) means[c] += sequences[c][t];
    means[c] /= Td;
    for (size_t t = 0; t < T; ++t) {
      const double d = sequences[c][t] - means[c];
      vars[c] += d * d;
    }
    vars[c] /= (Td - 1.0);
    grand += means[c];
  }
  grand /= static_cast<double>(C);

  double W = 0.0, var_means = 0.0;
  for (size_t c = 0; c < C; ++c) {
    W += vars[c];
    var_means += (means[c] - grand) * (means[c] - grand);
  }
  W /= static_cast<double>(C);
  var_means /= static_cast<double>(C - 1);

  if (!(W > 0.0))
    return var_means > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double vhat = (Td - 1.0) / Td * W + var_means;
  return std::max(1.0, std::sqrt(vhat / W));
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& ch : chains) {
    const size_t half = ch.size() / 2;
    if (half < 2)
      throw std::invalid_argument("split_rhat: chains too short to split");
    halves.emplace_back(ch.begin(), ch.begin() + static_cast<long>(half));
    halves.emplace_back(ch.end() - static_cast<long>(half), ch.end());
  }
  return potential_scale_reduction(halves);
}

}  // namespace rvm
