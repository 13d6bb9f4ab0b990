#include "rvm/kernel.hpp"

#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rvm {

std::string to_string(KernelFamily f) {
  return f == KernelFamily::Gaussian ? "gaussian" : "polynomial";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "polynomial") return KernelFamily::Polynomial;
  throw ConfigError("unknown kernel family: " + s);
}

namespace {

[[noreturn]] void entry_error(int i, int j, const std::string& what) {
  throw NumericalError("kernel entry (" + std::to_string(i) + "," +
                       std::to_string(j) + "): " + what);
}

double poly_entry(double dot, double theta, double scale, int i, int j) {
  const double base = dot + 1.0;
  if (base < 0.0 && theta != std::floor(theta))
    entry_error(i, j, "negative base with non-integer exponent");
  if (base > 0.0 && theta * std::log(base) > 700.0) {
    // (x.x'+1)^theta overflows a double; retry in log space and only fail
    // if the scaled entry itself is unrepresentable.
    const double log_entry = theta * std::log(base) - std::log(scale);
    if (log_entry > 709.0) entry_error(i, j, "polynomial kernel overflow");
    return std::exp(log_entry);
  }
  const double v = std::pow(base, theta) / scale;
  if (!std::isfinite(v)) entry_error(i, j, "non-finite entry");
  return v;
}

double entry_from_rows(const DesignMatrix& X, int i, int j, const KernelSpec& spec) {
  if (spec.family == KernelFamily::Gaussian) {
    const double d2 = (X.rows.row(i) - X.rows.row(j)).squaredNorm();
    const double v = std::exp(-d2 / spec.theta) / spec.scale_normalization;
    if (!std::isfinite(v)) entry_error(i, j, "non-finite entry");
    return v;
  }
  const double dot = X.rows.row(i).dot(X.rows.row(j));
  return poly_entry(dot, spec.theta, spec.scale_normalization, i, j);
}

}  // namespace

double kernel_entry(const Vector& xi, const Vector& xj, const KernelSpec& spec) {
  spec.validate();
  if (spec.family == KernelFamily::Gaussian) {
    const double v = std::exp(-(xi - xj).squaredNorm() / spec.theta) /
                     spec.scale_normalization;
    if (!std::isfinite(v)) entry_error(-1, -1, "non-finite entry");
    return v;
  }
  return poly_entry(xi.dot(xj), spec.theta, spec.scale_normalization, -1, -1);
}

KernelMatrix build_kernel(const DesignMatrix& X, const KernelSpec& spec) {
  X.validate();
  spec.validate();
  const int n = X.n();
  Matrix K(n, n);
  // Each (i, j <= i) pair is independent; mirrored writes keep symmetry exact.
  // Exceptions cannot unwind through the parallel region, so the first one is
  // captured and rethrown afterwards.
  std::exception_ptr error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (int i = 0; i < n; ++i) {
    try {
      for (int j = 0; j <= i; ++j) {
        const double v = entry_from_rows(X, i, j, spec);
        K(i, j) = v;
        K(j, i) = v;
      }
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(rvm_kernel_error)
#endif
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return KernelMatrix{std::move(K), spec};
}

KernelMatrix build_kernel_serial(const DesignMatrix& X, const KernelSpec& spec) {
  X.validate();
  spec.validate();
  const int n = X.n();
  Matrix K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = entry_from_rows(X, i, j, spec);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return KernelMatrix{std::move(K), spec};
}

SpectralCertificate spectral_certificate(const Matrix& K, double c1, double c2) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("spectral_certificate: matrix not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_certificate: eigensolver did not converge");
  SpectralCertificate cert;
  cert.lambda_min = es.eigenvalues().minCoeff();
  cert.lambda_max = es.eigenvalues().maxCoeff();
  cert.c1 = c1;
  cert.c2 = c2;
  constexpr double slack = 1e-9;  // floating-point eigensolve tolerance
  cert.satisfied = (c1 - slack <= cert.lambda_min) && (cert.lambda_max <= c2 + slack);
  return cert;
}

SpectralCertificate spectral_certificate(const KernelMatrix& K, double c1, double c2) {
  return spectral_certificate(K.entries, c1, c2);
}

SeparationReport check_gaussian_separation(const DesignMatrix& X, double theta) {
  X.validate();
  if (!(theta > 0.0))
    throw std::invalid_argument("check_gaussian_separation: theta must be > 0");
  const int n = X.n();
  if (n < 2)
    throw std::invalid_argument("check_gaussian_separation: need n >= 2");
  double min_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      min_d2 = std::min(min_d2, (X.rows.row(i) - X.rows.row(j)).squaredNorm());
  SeparationReport rep;
  rep.min_sq_distance = min_d2;
  rep.threshold = 2.0 * theta * std::log(static_cast<double>(n));
  rep.satisfied = min_d2 >= rep.threshold;
  return rep;
}

OrthogonalityReport check_near_orthogonality(const DesignMatrix& X, double a_L, double a_U) {
  X.validate();
  if (!(a_L > 0.5))
    throw std::invalid_argument("check_near_orthogonality: requires a_L > 1/2");
  if (!(a_L <= a_U))
    throw std::invalid_argument("check_near_orthogonality: requires a_L <= a_U");
  const int n = X.n();
  const double p = static_cast<double>(X.p());
  OrthogonalityReport rep;
  rep.h = 2.0 * a_U * static_cast<double>(n);
  rep.k = std::pow(static_cast<double>(n), 4.0);
  for (int i = 0; i < n; ++i) {
    rep.max_diag_dev = std::max(
        rep.max_diag_dev, std::abs((X.rows.row(i).squaredNorm() + 1.0) / p - 1.0));
    for (int j = 0; j < i; ++j)
      rep.max_offdiag = std::max(
          rep.max_offdiag, std::abs((X.rows.row(i).dot(X.rows.row(j)) + 1.0) / p));
  }
  rep.satisfied = rep.max_diag_dev <= 1.0 / rep.h && rep.max_offdiag <= 1.0 / rep.k;
  return rep;
}

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::ExactOrthogonal: return "exact_orthogonal";
    case DesignKind::Separated: return "separated";
    case DesignKind::PerturbedOrthogonal: return "perturbed_orthogonal";
  }
  return "?";
}

DesignKind design_kind_from_string(const std::string& s) {
  if (s == "exact_orthogonal") return DesignKind::ExactOrthogonal;
  if (s == "separated") return DesignKind::Separated;
  if (s == "perturbed_orthogonal") return DesignKind::PerturbedOrthogonal;
  throw ConfigError("unknown design kind: " + s);
}

namespace {

// Rows of a random orthonormal n-frame in R^p (QR of a seeded Gaussian matrix).
Matrix orthonormal_frame(int n, int p, Rng& rng) {
  Matrix G(p, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < p; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(p, n);
  return Q.transpose();  // n x p, orthonormal rows
}

}  // namespace

DesignMatrix generate_design(int n, int p, DesignKind kind, Rng& rng, double theta) {
  if (n < 1 || p < 1)
    throw std::invalid_argument("generate_design: need n >= 1 and p >= 1");
  switch (kind) {
    case DesignKind::ExactOrthogonal: {
      if (p < n)
        throw std::invalid_argument("generate_design: exact_orthogonal needs p >= n");
      Matrix X = std::sqrt(static_cast<double>(p)) * orthonormal_frame(n, p, rng);
      return DesignMatrix(std::move(X));
    }
    case DesignKind::Separated: {
      if (!(theta > 0.0))
        throw std::invalid_argument("generate_design: separated needs theta > 0");
      // Lattice along the first coordinate; 2% headroom over the cutoff so
      // rounding cannot push the minimum distance below it.
      const double cutoff =
          2.0 * theta * std::log(std::max(2.0, static_cast<double>(n)));
      const double spacing = std::sqrt(1.02 * cutoff);
      Matrix X = Matrix::Zero(n, p);
      Vector shift(p);
      for (int j = 0; j < p; ++j) shift(j) = rng.uniform();
      for (int i = 0; i < n; ++i) X.row(i) = shift.transpose();
      for (int i = 0; i < n; ++i) X(i, 0) += spacing * static_cast<double>(i);
      return DesignMatrix(std::move(X));
    }
    case DesignKind::PerturbedOrthogonal: {
      if (p < n)
        throw std::invalid_argument("generate_design: perturbed_orthogonal needs p >= n");
      const double pd = static_cast<double>(p);
      const double n4 = std::pow(static_cast<double>(n), 4.0);
      // Target Gram: diag p-1, off-diagonal -1 + p/(2 n^4).  Rows are
      // a*u_i + g*s with u_i orthonormal and s = sum_j u_j.
      const double gram_off = -1.0 + pd / (2.0 * n4);
      const double a = std::sqrt(pd - 1.0 - gram_off);
      const double disc = a * a + static_cast<double>(n) * gram_off;
      if (disc < 0.0)
        throw std::invalid_argument("generate_design: perturbed_orthogonal needs p >= n");
      const double g = (-a + std::sqrt(disc)) / static_cast<double>(n);
      Matrix U = orthonormal_frame(n, p, rng);
      Eigen::RowVectorXd s = U.colwise().sum();
      Matrix X = a * U + Vector::Ones(n) * (g * s);
      // Noise of norm sqrt(p)/(5 n^4) moves every inner product by less than
      // p/(2 n^4), keeping the bounds and a strictly positive kernel base.
      const double rho = std::sqrt(pd) / (5.0 * n4);
      for (int i = 0; i < n; ++i) {
        Vector d(p);
        for (int j = 0; j < p; ++j) d(j) = rng.normal();
        X.row(i) += (rho / d.norm()) * d.transpose();
      }
      return DesignMatrix(std::move(X));
    }
  }
  throw std::invalid_argument("generate_design: unknown kind");
}

}  // namespace rvm
