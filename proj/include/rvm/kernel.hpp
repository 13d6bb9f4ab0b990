#pragma once

#include "rvm/rng.hpp"
#include "rvm/types.hpp"

namespace rvm {

/// Evaluate the scalar kernel on a single pair of rows (including the
/// scale normalization).  Throws NumericalError if the entry is not finite.
double kernel_entry(const Vector& xi, const Vector& xj, const KernelSpec& spec);

/// Build the n x n Gram matrix.  Entries (i,j) and (j,i) are computed once
/// and mirrored, so symmetry is exact.  Parallel over row pairs.
KernelMatrix build_kernel(const DesignMatrix& X, const KernelSpec& spec);

/// Single-threaded reference implementation of build_kernel; kept for
/// testing and benchmarked against the parallel path.
KernelMatrix build_kernel_serial(const DesignMatrix& X, const KernelSpec& spec);

/// Dense symmetric eigensolve; pass/fail against [c1, c2] with 1e-9
/// absolute slack for floating-point eigenvalues.
SpectralCertificate spectral_certificate(const Matrix& K, double c1, double c2);
SpectralCertificate spectral_certificate(const KernelMatrix& K, double c1, double c2);

struct SeparationReport {
  double min_sq_distance = 0.0;
  double threshold = 0.0;  // 2 * theta * log n
  bool satisfied = false;
};

/// Minimum pairwise squared distance against the 2*theta*log(n) cutoff
/// that keeps a Gaussian Gram matrix near the identity.
SeparationReport check_gaussian_separation(const DesignMatrix& X, double theta);

struct OrthogonalityReport {
  double max_diag_dev = 0.0;  // max_i |(x_i.x_i + 1)/p - 1|
  double max_offdiag = 0.0;   // max_{i != j} |(x_i.x_j + 1)/p|
  double h = 0.0;             // 2 * a_U * n
  double k = 0.0;             // n^4
  bool satisfied = false;
};

/// Near-orthogonality check for scaled polynomial kernels with
/// theta in [a_L, a_U]; requires a_L > 1/2.
OrthogonalityReport check_near_orthogonality(const DesignMatrix& X, double a_L, double a_U);

enum class DesignKind { ExactOrthogonal, Separated, PerturbedOrthogonal };

std::string to_string(DesignKind k);
DesignKind design_kind_from_string(const std::string& s);

/// Generate a design matrix.
///  - ExactOrthogonal (p >= n): rows are sqrt(p) times an orthonormal
///    n-frame, so X X^T = p I up to rounding.
///  - Separated: rows on a line with spacing chosen so the minimum pairwise
///    squared distance exceeds 2*theta*log(n); a common random shift keeps
///    replicates distinct without changing distances.
///  - PerturbedOrthogonal (p >= n): rows with x_i.x_i = p-1 and
///    x_i.x_j = -1 + p/(2 n^4) exactly, plus per-row noise small enough to
///    keep the near-orthogonality bounds and a positive kernel base.
DesignMatrix generate_design(int n, int p, DesignKind kind, Rng& rng, double theta = 1.0);

}  // namespace rvm
