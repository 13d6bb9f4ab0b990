#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rvm/kernel.hpp"
#include "rvm/rng.hpp"

using namespace rvm;

namespace {

// Independent elementwise oracle: the scalar formula evaluated in a plain
// double loop, separate from the matrix builder.
Matrix scalar_oracle(const DesignMatrix& X, const KernelSpec& spec) {
  const int n = X.n();
  Matrix K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      if (spec.family == KernelFamily::Gaussian) {
        double d2 = 0.0;
        for (int k = 0; k < X.p(); ++k) {
          const double d = X.rows(i, k) - X.rows(j, k);
          d2 += d * d;
        }
        v = std::exp(-d2 / spec.theta);
      } else {
        double dot = 0.0;
        for (int k = 0; k < X.p(); ++k) dot += X.rows(i, k) * X.rows(j, k);
        v = std::pow(dot + 1.0, spec.theta);
      }
      K(i, j) = v / spec.scale_normalization;
    }
  return K;
}

DesignMatrix random_design(int n, int p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  return DesignMatrix(X);
}

}  // namespace

TEST_CASE("gaussian kernel basic values") {
  Matrix one(1, 2);
  one << 0.3, -1.2;
  const KernelMatrix K = build_kernel(DesignMatrix(one), {KernelFamily::Gaussian, 2.5, 1.0});
  CHECK(K.entries(0, 0) == 1.0);

  // two rows at squared distance exactly theta
  const double theta = 1.7;
  Matrix two(2, 2);
  two << 0.0, 0.0, std::sqrt(theta), 0.0;
  const KernelMatrix K2 =
      build_kernel(DesignMatrix(two), {KernelFamily::Gaussian, theta, 1.0});
  CHECK(K2.entries(0, 1) == doctest::Approx(0.3678794412).epsilon(1e-9));
  CHECK(K2.entries(0, 0) == 1.0);
  CHECK(K2.entries(1, 1) == 1.0);
}

TEST_CASE("polynomial kernel on standard basis rows") {
  Matrix e(2, 3);
  e << 1, 0, 0, 0, 1, 0;
  const KernelMatrix K =
      build_kernel(DesignMatrix(e), {KernelFamily::Polynomial, 1.0, 1.0});
  CHECK(K.entries(0, 0) == 2.0);
  CHECK(K.entries(1, 1) == 2.0);
  CHECK(K.entries(0, 1) == 1.0);
  CHECK(K.entries(1, 0) == 1.0);
}

TEST_CASE("kernel matches the elementwise scalar oracle") {
  const DesignMatrix X = random_design(4, 3, 11);
  for (const KernelSpec spec : {KernelSpec{KernelFamily::Polynomial, 3.0, 1.0},
                                KernelSpec{KernelFamily::Gaussian, 0.8, 1.0},
                                KernelSpec{KernelFamily::Polynomial, 2.0, 5.0}}) {
    const KernelMatrix K = build_kernel(X, spec);
    const Matrix ref = scalar_oracle(X, spec);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(std::abs(K.entries(i, j) - ref(i, j)) <=
              1e-12 * std::max(1.0, std::abs(ref(i, j))));
  }
}

TEST_CASE("kernel symmetry is exact and parallel equals serial") {
  const DesignMatrix X = random_design(23, 7, 99);
  for (const KernelSpec spec : {KernelSpec{KernelFamily::Gaussian, 1.3, 1.0},
                                KernelSpec{KernelFamily::Polynomial, 2.0, 1.0}}) {
    const KernelMatrix K = build_kernel(X, spec);
    const KernelMatrix Ks = build_kernel_serial(X, spec);
    CHECK((K.entries - K.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((K.entries - Ks.entries).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gaussian kernel is positive semidefinite on random designs") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const DesignMatrix X = random_design(40, 5, seed);
    const KernelMatrix K = build_kernel(X, {KernelFamily::Gaussian, 2.0, 1.0});
    const SpectralCertificate cert =
        spectral_certificate(K, -1e10, 1e10);
    CHECK(cert.lambda_min >= -1e-10 * 40);
  }
}

TEST_CASE("polynomial overflow guard") {
  Matrix big(2, 1);
  big << 1e8, 1e8;
  const DesignMatrix X(big);
  // theta * log(x.x + 1) ~ 40 * 36.8 >> 709: overflows even in log space.
  CHECK_THROWS_AS(build_kernel(X, {KernelFamily::Polynomial, 40.0, 1.0}),
                  NumericalError);
  // With a large enough normalizer the log-space route representable again.
  const double theta = 20.0;
  const double log_entry = theta * std::log(1e16 + 1.0);
  const double scale = std::exp(log_entry - 10.0);
  const KernelMatrix K = build_kernel(X, {KernelFamily::Polynomial, theta, scale});
  CHECK(K.entries(0, 0) == doctest::Approx(std::exp(10.0)).epsilon(1e-10));
  // Negative base with fractional exponent is a construction error.
  Matrix neg(2, 1);
  neg << 2.0, -2.0;
  CHECK_THROWS_AS(build_kernel(DesignMatrix(neg), {KernelFamily::Polynomial, 0.5, 1.0}),
                  NumericalError);
}

TEST_CASE("spectral certificate on fixed matrices") {
  const SpectralCertificate id3 = spectral_certificate(Matrix::Identity(3, 3), 0.5, 2.0);
  CHECK(id3.satisfied);
  CHECK(id3.lambda_min == doctest::Approx(1.0));
  CHECK(id3.lambda_max == doctest::Approx(1.0));

  Matrix m(2, 2);
  m << 1.0, 0.9, 0.9, 1.0;
  const SpectralCertificate c = spectral_certificate(m, 0.5, 2.0);
  CHECK_FALSE(c.satisfied);
  CHECK(c.lambda_min == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(c.lambda_max == doctest::Approx(1.9).epsilon(1e-9));
}

TEST_CASE("gaussian separation check") {
  Matrix dup(2, 2);
  dup << 1.0, 2.0, 1.0, 2.0;
  const SeparationReport same = check_gaussian_separation(DesignMatrix(dup), 1.0);
  CHECK(same.min_sq_distance == 0.0);
  CHECK_FALSE(same.satisfied);

  // scaled distinct basis vectors: pairwise squared distance 2 * (2 theta log n)
  const int n = 5, p = 5;
  const double theta = 1.5;
  const double c = std::sqrt(2.0 * theta * std::log(static_cast<double>(n)));
  Matrix basis = Matrix::Zero(n, p);
  for (int i = 0; i < n; ++i) basis(i, i) = c;
  const SeparationReport rep = check_gaussian_separation(DesignMatrix(basis), theta);
  CHECK(rep.satisfied);
  CHECK(rep.min_sq_distance ==
        doctest::Approx(2.0 * rep.threshold).epsilon(1e-12));

  Matrix single(1, 2);
  single << 0.0, 0.0;
  CHECK_THROWS_AS(check_gaussian_separation(DesignMatrix(single), 1.0),
                  std::invalid_argument);
}

TEST_CASE("separated designs pass the unit-interval certificate for n >= 20") {
  // The guarantee holds for sufficiently large n; report the empirical
  // cutoff on a grid and require every n >= 20 to pass.
  const double theta = 1.0;
  int first_passing = -1;
  bool all_after_pass = true;
  for (int n = 5; n <= 100; n += (n < 30 ? 1 : 14)) {
    Rng rng(1234 + static_cast<std::uint64_t>(n));
    const DesignMatrix X = generate_design(n, 3, DesignKind::Separated, rng, theta);
    const SeparationReport rep = check_gaussian_separation(X, theta);
    REQUIRE(rep.satisfied);
    const KernelMatrix K = build_kernel(X, {KernelFamily::Gaussian, theta, 1.0});
    const SpectralCertificate cert =
        spectral_certificate(K, 1.0 - 1.0 / n, 1.0 + 1.0 / n);
    if (cert.satisfied && first_passing < 0) first_passing = n;
    if (n >= 20) all_after_pass = all_after_pass && cert.satisfied;
  }
  MESSAGE("empirical smallest passing n: ", first_passing);
  CHECK(first_passing > 0);
  CHECK(all_after_pass);
}

TEST_CASE("near-orthogonality check") {
  // Rows with squared norm p-1 and pairwise inner product -1 give
  // deviations of exactly zero.
  const int n = 4, p = 6;
  Matrix U = Matrix::Zero(n, p);
  for (int i = 0; i < n; ++i) U(i, i) = 1.0;
  Eigen::RowVectorXd s = U.colwise().sum();
  const double a = std::sqrt(static_cast<double>(p));
  const double g = (-a + std::sqrt(a * a - static_cast<double>(n))) / n;
  Matrix X = a * U + Vector::Ones(n) * (g * s);
  const OrthogonalityReport rep = check_near_orthogonality(DesignMatrix(X), 0.6, 2.0);
  CHECK(rep.max_diag_dev == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.max_offdiag == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.satisfied);
  CHECK(rep.h == doctest::Approx(2.0 * 2.0 * n));
  CHECK(rep.k == doctest::Approx(std::pow(n, 4.0)));

  CHECK_THROWS_AS(check_near_orthogonality(DesignMatrix(X), 0.5, 2.0),
                  std::invalid_argument);

  // n = 2 rows violating the off-diagonal bound by construction.
  Matrix bad(2, 4);
  bad << 1, 1, 0, 0, 1, 0, 1, 0;
  const OrthogonalityReport worse = check_near_orthogonality(DesignMatrix(bad), 0.6, 1.0);
  CHECK_FALSE(worse.satisfied);
}

TEST_CASE("generate_design: exact orthogonal frames") {
  Rng rng(5);
  const DesignMatrix X = generate_design(4, 8, DesignKind::ExactOrthogonal, rng);
  const Matrix gram = X.rows * X.rows.transpose();
  CHECK((gram - 8.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8 * 8.0);
  CHECK_THROWS_AS(generate_design(8, 4, DesignKind::ExactOrthogonal, rng),
                  std::invalid_argument);
}

TEST_CASE("generate_design: separated and perturbed orthogonal") {
  Rng rng(6);
  const DesignMatrix S = generate_design(10, 10, DesignKind::Separated, rng, 1.0);
  CHECK(check_gaussian_separation(S, 1.0).satisfied);

  const DesignMatrix P = generate_design(8, 16, DesignKind::PerturbedOrthogonal, rng);
  CHECK(check_near_orthogonality(P, 0.6, 2.0).satisfied);
}

TEST_CASE("exact orthogonal gaussian off-diagonals equal exp(-2p/theta)") {
  const double theta = 64.0;
  for (int p : {64, 256}) {
    Rng rng(77 + static_cast<std::uint64_t>(p));
    const DesignMatrix X = generate_design(6, p, DesignKind::ExactOrthogonal, rng);
    const KernelMatrix K = build_kernel(X, {KernelFamily::Gaussian, theta, 1.0});
    const double expect = std::exp(-2.0 * p / theta);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < i; ++j)
        CHECK(std::abs(K.entries(i, j) - expect) <= 1e-12 * expect);
  }
}

TEST_CASE("perturbed orthogonal designs certify the scaled polynomial kernel") {
  // Five theta values across [a_L, a_U]; eigenvalues of p^-theta K must sit
  // inside [1 - 1/n, 1 + 1/n].
  const double a_L = 0.6, a_U = 2.0;
  for (int n : {20, 32}) {
    Rng rng(900 + static_cast<std::uint64_t>(n));
    const int p = 2 * n;
    const DesignMatrix X = generate_design(n, p, DesignKind::PerturbedOrthogonal, rng);
    REQUIRE(check_near_orthogonality(X, a_L, a_U).satisfied);
    for (int k = 0; k < 5; ++k) {
      const double theta = a_L + (a_U - a_L) * k / 4.0;
      KernelSpec spec{KernelFamily::Polynomial, theta,
                      std::pow(static_cast<double>(p), theta)};
      const KernelMatrix K = build_kernel(X, spec);
      const SpectralCertificate cert =
          spectral_certificate(K, 1.0 - 1.0 / n, 1.0 + 1.0 / n);
      CHECK(cert.satisfied);
    }
  }
}
