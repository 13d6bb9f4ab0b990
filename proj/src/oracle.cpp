#include "rvm/oracle.hpp"

#include <cmath>
#include <vector>

namespace rvm {

namespace {

struct NodeEval {
  double lw = 0.0;  // unnormalized log weight
  double m[3] = {0, 0, 0};
  double km[3] = {0, 0, 0};
  double cms = 0.0;      // E(sigma^2 | Lambda^2, Y)
  double tr_kak = 0.0;   // tr(K A^-1 K)
  double tr_ainv = 0.0;  // tr(A^-1)
  double norm_km_sq = 0.0;
  double norm_m_sq = 0.0;
};

struct Problem {
  const Matrix* K;
  Matrix K2;
  Vector KY;
  double yty = 0.0;
  int n = 0;
  const LocalVariancePrior* prior;
  Hyperparams hyper;
};

NodeEval evaluate_node(const Problem& pb, const Vector& lambda_sq, bool with_prior) {
  const int n = pb.n;
  Matrix A = pb.K2;
  for (int i = 0; i < n; ++i)
    A(i, i) += 1.0 / (pb.hyper.tau_sq * lambda_sq(i));
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("oracle: SPD factorization failed on a grid node");
  const Vector m = llt.solve(pb.KY);
  double quad = pb.yty - pb.KY.dot(m);
  if (quad < -1e-9 * std::max(1.0, pb.yty))
    throw NumericalError("oracle: negative quadratic form " + std::to_string(quad));
  quad = std::max(quad, 0.0);
  const double s = pb.hyper.b + quad;
  double logdet_a = 0.0;
  for (int i = 0; i < n; ++i) logdet_a += std::log(llt.matrixLLT()(i, i));
  logdet_a *= 2.0;

  Matrix linv = llt.matrixL().solve(Matrix::Identity(n, n));
  double tr_ainv_d = 0.0;
  for (int i = 0; i < n; ++i)
    tr_ainv_d += linv.col(i).squaredNorm() / (pb.hyper.tau_sq * lambda_sq(i));

  NodeEval ev;
  const double na = static_cast<double>(n) + pb.hyper.a;
  // |K^2 Lambda^2 + tau^-2 I| = |A| |Lambda^2| via the symmetrized
  // factorization Lambda (K^2 + tau^-2 Lambda^-2) Lambda.
  double lw = -0.5 * logdet_a - 0.5 * na * std::log(s);
  for (int i = 0; i < n; ++i) {
    const double z = std::log(lambda_sq(i));
    lw += 0.5 * z;  // -1/2 log|Lambda^2| plus the log-coordinate Jacobian
    if (with_prior) lw += pb.prior->log_density(lambda_sq(i));
  }
  ev.lw = lw;
  const Vector km = (*pb.K) * m;
  for (int i = 0; i < n; ++i) {
    ev.m[i] = m(i);
    ev.km[i] = km(i);
  }
  ev.cms = s / (na - 2.0);
  ev.tr_kak = static_cast<double>(n) - tr_ainv_d;
  ev.tr_ainv = linv.squaredNorm();
  ev.norm_km_sq = km.squaredNorm();
  ev.norm_m_sq = m.squaredNorm();
  return ev;
}

struct Accumulator {
  double lmax = -std::numeric_limits<double>::infinity();
  double w = 0.0;
  double edge_w = 0.0;
  double m[3] = {0, 0, 0};
  double km[3] = {0, 0, 0};
  double cms = 0.0;
  double e_k = 0.0;  // cms*tr_kak + |Km|^2
  double e_b = 0.0;  // cms*tr_ainv + |m|^2
  int n = 0;

  void add(const NodeEval& ev, bool edge) {
    if (ev.lw > lmax) {
      const double r = std::exp(lmax - ev.lw);
      w *= r;
      edge_w *= r;
      cms *= r;
      e_k *= r;
      e_b *= r;
      for (int i = 0; i < n; ++i) {
        m[i] *= r;
        km[i] *= r;
      }
      lmax = ev.lw;
    }
    const double s = std::exp(ev.lw - lmax);
    w += s;
    if (edge) edge_w += s;
    cms += s * ev.cms;
    e_k += s * (ev.cms * ev.tr_kak + ev.norm_km_sq);
    e_b += s * (ev.cms * ev.tr_ainv + ev.norm_m_sq);
    for (int i = 0; i < n; ++i) {
      m[i] += s * ev.m[i];
      km[i] += s * ev.km[i];
    }
  }
};

Problem make_problem(const Matrix& K, const Vector& Y,
                     const LocalVariancePrior& prior, const Hyperparams& hyper) {
  const int n = static_cast<int>(Y.size());
  if (K.rows() != K.cols() || K.rows() != n)
    throw std::invalid_argument("oracle: kernel/Y dimension mismatch");
  if (n > 3)
    throw std::invalid_argument("oracle: unsupported size n = " + std::to_string(n) +
                                " (n <= 3 only)");
  hyper.validate(n);
  Problem pb;
  pb.K = &K;
  pb.K2 = K * K;
  pb.K2 = 0.5 * (pb.K2 + pb.K2.transpose()).eval();
  pb.KY = K * Y;
  pb.yty = Y.squaredNorm();
  pb.n = n;
  pb.prior = &prior;
  pb.hyper = hyper;
  return pb;
}

OracleResult finalize(const Problem& pb, const Accumulator& acc, double log_cell,
                      const GridSpec& resolved) {
  const int n = pb.n;
  OracleResult out;
  out.grid = resolved;
  out.mean_beta.resize(n);
  out.mean_Kbeta.resize(n);
  double norm_mean_km = 0.0, norm_mean_m = 0.0;
  for (int i = 0; i < n; ++i) {
    out.mean_beta(i) = acc.m[i] / acc.w;
    out.mean_Kbeta(i) = acc.km[i] / acc.w;
    norm_mean_km += out.mean_Kbeta(i) * out.mean_Kbeta(i);
    norm_mean_m += out.mean_beta(i) * out.mean_beta(i);
  }
  out.sigma_sq_mean = acc.cms / acc.w;
  out.trace_var_Kbeta = acc.e_k / acc.w - norm_mean_km;
  out.trace_var_beta = acc.e_b / acc.w - norm_mean_m;
  out.edge_mass = acc.edge_w / acc.w;
  out.log_normalizer = acc.lmax + std::log(acc.w) + log_cell;
  return out;
}

OracleResult run_grid(const Matrix& K, const Vector& Y,
                      const LocalVariancePrior& prior, const Hyperparams& hyper,
                      const GridSpec& grid, bool parallel) {
  Problem pb = make_problem(K, Y, prior, hyper);
  const int n = pb.n;

  if (prior.family() == PriorFamily::PointMass) {
    // Degenerate mixture: a single grid cell at the point mass.
    Vector lambda_sq = Vector::Constant(n, prior.param1());
    Accumulator acc;
    acc.n = n;
    acc.add(evaluate_node(pb, lambda_sq, false), false);
    GridSpec resolved = grid;
    resolved.nodes_per_dim = 1;
    resolved.lambda_lo = resolved.lambda_hi = prior.param1();
    OracleResult out = finalize(pb, acc, 0.0, resolved);
    out.edge_mass = 0.0;
    return out;
  }

  GridSpec resolved = grid;
  if (resolved.nodes_per_dim < 32)
    throw std::invalid_argument("oracle: nodes_per_dim must be >= 32");
  if (std::isnan(resolved.lambda_lo)) resolved.lambda_lo = prior.quantile(1e-4);
  if (std::isnan(resolved.lambda_hi)) resolved.lambda_hi = prior.quantile(1.0 - 1e-4);
  if (!(resolved.lambda_lo > 0.0) || !(resolved.lambda_lo < resolved.lambda_hi))
    throw std::invalid_argument("oracle: need 0 < lambda_lo < lambda_hi");

  const long N = resolved.nodes_per_dim;
  long total = 1;
  for (int d = 0; d < n; ++d) {
    total *= N;
    if (total > 1000000)
      throw std::invalid_argument("oracle: grid has more than 1e6 nodes");
  }

  const double zlo = std::log(resolved.lambda_lo);
  const double zhi = std::log(resolved.lambda_hi);
  const double dz = (zhi - zlo) / static_cast<double>(N);
  std::vector<double> lambda_grid(static_cast<size_t>(N));
  for (long k = 0; k < N; ++k)
    lambda_grid[static_cast<size_t>(k)] =
        std::exp(zlo + (static_cast<double>(k) + 0.5) * dz);

  Accumulator acc;
  acc.n = n;
  // Chunked sweep: nodes evaluate independently (parallel inside a chunk),
  // accumulation runs serially in index order so results do not depend on
  // the thread count.
  const long chunk = 65536;
  std::vector<NodeEval> evals(static_cast<size_t>(std::min(chunk, total)));
  std::vector<char> edges(evals.size());
  std::exception_ptr error = nullptr;
  for (long base = 0; base < total; base += chunk) {
    const long count = std::min(chunk, total - base);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long off = 0; off < count; ++off) {
      try {
        long idx = base + off;
        Vector lambda_sq(n);
        bool edge = false;
        for (int d = 0; d < n; ++d) {
          const long k = idx % N;
          idx /= N;
          lambda_sq(d) = lambda_grid[static_cast<size_t>(k)];
          edge = edge || k == 0 || k == N - 1;
        }
        evals[static_cast<size_t>(off)] = evaluate_node(pb, lambda_sq, true);
        edges[static_cast<size_t>(off)] = edge;
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical(rvm_oracle_error)
#endif
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (long off = 0; off < count; ++off)
      acc.add(evals[static_cast<size_t>(off)], edges[static_cast<size_t>(off)] != 0);
  }

  OracleResult out = finalize(pb, acc, static_cast<double>(n) * std::log(dz), resolved);
  if (out.edge_mass > 0.01)
    throw ConfigError("oracle: " + std::to_string(100.0 * out.edge_mass) +
                      "% of the posterior weight sits on edge nodes; widen the "
                      "lambda range");
  return out;
}

}  // namespace

OracleResult oracle_posterior(const Matrix& K, const Vector& Y,
                              const LocalVariancePrior& prior,
                              const Hyperparams& hyper, const GridSpec& grid) {
  return run_grid(K, Y, prior, hyper, grid, true);
}

OracleResult oracle_posterior_serial(const Matrix& K, const Vector& Y,
                                     const LocalVariancePrior& prior,
                                     const Hyperparams& hyper, const GridSpec& grid) {
  return run_grid(K, Y, prior, hyper, grid, false);
}

RefinedOracle oracle_refined(const Matrix& K, const Vector& Y,
                             const LocalVariancePrior& prior,
                             const Hyperparams& hyper, const GridSpec& grid) {
  RefinedOracle out;
  out.coarse = oracle_posterior(K, Y, prior, hyper, grid);
  GridSpec fine = out.coarse.grid;
  fine.nodes_per_dim *= 2;
  out.fine = oracle_posterior(K, Y, prior, hyper, fine);
  const double denom = std::max(out.fine.mean_beta.norm(), 1e-300);
  out.rel_change_mean_beta = (out.fine.mean_beta - out.coarse.mean_beta).norm() / denom;
  return out;
}

double oracle_log_weight(const Matrix& K, const Vector& Y,
                         const LocalVariancePrior& prior, const Hyperparams& hyper,
                         const Vector& lambda_sq) {
  Problem pb = make_problem(K, Y, prior, hyper);
  if (lambda_sq.size() != pb.n)
    throw std::invalid_argument("oracle_log_weight: lambda_sq length mismatch");
  // Report the density in lambda^2 coordinates: strip the log-coordinate
  // Jacobian from the node weight.
  NodeEval ev = evaluate_node(pb, lambda_sq, true);
  double lw = ev.lw;
  for (int i = 0; i < pb.n; ++i) lw -= std::log(lambda_sq(i));
  return lw;
}

}  // namespace rvm
