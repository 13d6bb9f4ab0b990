#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bad or inconsistent configuration / input files (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: factorization breakdown, sampler non-termination,
/// negative quadratic forms beyond tolerance (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// n rows of covariate vectors, one observation per row.
struct DesignMatrix {
  Matrix rows;  // n x p

  DesignMatrix() = default;
  explicit DesignMatrix(Matrix m) : rows(std::move(m)) { validate(); }

  int n() const { return static_cast<int>(rows.rows()); }
  int p() const { return static_cast<int>(rows.cols()); }

  void validate() const {
    if (rows.rows() < 1 || rows.cols() < 1)
      throw std::invalid_argument("DesignMatrix: need n >= 1 and p >= 1");
    if (!rows.allFinite())
      throw std::invalid_argument("DesignMatrix: non-finite entry");
  }
};

enum class KernelFamily { Gaussian, Polynomial };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// Scalar kernel choice. scale_normalization divides every entry
/// (set to p^theta when analysing scaled polynomial kernels, 1 otherwise).
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double theta = 1.0;
  double scale_normalization = 1.0;

  void validate() const {
    if (!(theta > 0.0))
      throw std::invalid_argument("KernelSpec: theta must be > 0");
    if (!(scale_normalization > 0.0))
      throw std::invalid_argument("KernelSpec: scale_normalization must be > 0");
  }
};

/// Symmetric Gram matrix together with the spec it was built from.
struct KernelMatrix {
  Matrix entries;  // n x n, symmetric by construction
  KernelSpec spec;

  int n() const { return static_cast<int>(entries.rows()); }
};

/// Eigenvalue range of a kernel matrix checked against claimed bounds.
struct SpectralCertificate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool satisfied = false;
};

}  // namespace rvm
