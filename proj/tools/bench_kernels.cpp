// Timing comparison between the serial reference implementations and the
// OpenMP paths (kernel construction and the grid oracle).  The two paths
// must agree exactly; the max absolute difference is printed alongside.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rvm/kernel.hpp"
#include "rvm/oracle.hpp"

using namespace rvm;

namespace {

template <typename F>
double time_ms(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 512;
  const int p = argc > 2 ? std::atoi(argv[2]) : 64;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (no OpenMP)\n");
#endif

  Rng rng(42);
  Matrix raw(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) raw(i, j) = rng.normal();
  const DesignMatrix X(raw);

  std::printf("%-28s %10s %10s %8s %12s\n", "case", "serial ms", "omp ms",
              "speedup", "max |diff|");
  for (const KernelSpec spec :
       {KernelSpec{KernelFamily::Gaussian, 1.0, 1.0},
        KernelSpec{KernelFamily::Polynomial, 2.0, 1.0}}) {
    KernelMatrix ks, kp;
    const double ts = time_ms([&] { ks = build_kernel_serial(X, spec); }, reps);
    const double tp = time_ms([&] { kp = build_kernel(X, spec); }, reps);
    const double diff = (ks.entries - kp.entries).cwiseAbs().maxCoeff();
    std::printf("%-28s %10.3f %10.3f %8.2f %12.3g\n",
                (to_string(spec.family) + " kernel n=" + std::to_string(n)).c_str(),
                ts, tp, ts / tp, diff);
  }

  // Oracle on a small 3-dimensional problem.
  {
    Rng r2(7);
    const DesignMatrix Xs(
        generate_design(3, 4, DesignKind::ExactOrthogonal, r2, 1.0));
    const KernelMatrix K = build_kernel(Xs, {KernelFamily::Gaussian, 4.0, 1.0});
    Vector y(3);
    y << 1.0, -0.5, 0.25;
    const LocalVariancePrior prior(PriorFamily::InverseGamma, 3.0, 1.0);
    Hyperparams hyper;
    hyper.tau_sq = 0.5;
    GridSpec grid;
    grid.nodes_per_dim = 72;
    OracleResult os, op;
    const double ts =
        time_ms([&] { os = oracle_posterior_serial(K.entries, y, prior, hyper, grid); }, 1);
    const double tp =
        time_ms([&] { op = oracle_posterior(K.entries, y, prior, hyper, grid); }, 1);
    const double diff = (os.mean_beta - op.mean_beta).cwiseAbs().maxCoeff();
    std::printf("%-28s %10.3f %10.3f %8.2f %12.3g\n", "oracle grid n=3 (72^3)",
                ts, tp, ts / tp, diff);
  }
  return 0;
}
