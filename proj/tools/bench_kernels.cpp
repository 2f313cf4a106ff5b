// Timing comparison of the OpenMP kernels against their serial reference,
// plus one replica-loop benchmark (MSD walks). Run: sepsim_bench [n]

#include <chrono>
#include <cstdio>
#include <vector>

#include "sepsim/environment.hpp"
#include "sepsim/homogenization.hpp"
#include "sepsim/kernels.hpp"
#include "sepsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clock_type::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t n = argc > 1 ? std::atoll(argv[1]) : 1 << 21;
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("kernel benchmark, n = %lld, threads = %d\n",
              static_cast<long long>(n), threads);

  sep::rng::Stream rs(42);
  std::vector<double> a(n), b(n), y(n);
  for (std::int64_t i = 0; i < n; ++i) {
    a[i] = rs.u01();
    b[i] = rs.u01();
  }

  // A 2-D conductance environment provides a realistic sparse matvec.
  int L = 512;
  auto e = sep::env::gen_zd_conductance(2, L, sep::env::ScalarLaw::uniform(1, 2),
                                        7);
  std::vector<double> x(e.n()), z(e.n());
  for (std::int64_t i = 0; i < e.n(); ++i) x[i] = rs.u01();

  double t_dot_s = time_best_of(5, [&] {
    volatile double v = sep::kernels::serial::dot(a, b);
    (void)v;
  });
  double t_dot_p = time_best_of(5, [&] {
    volatile double v = sep::kernels::dot(a, b);
    (void)v;
  });
  double t_spmv_s = time_best_of(5, [&] {
    sep::kernels::serial::laplacian_apply(e.graph.row_ptr, e.graph.col,
                                          e.graph.rate, 1.0, x, z);
  });
  double t_spmv_p = time_best_of(5, [&] {
    sep::kernels::laplacian_apply(e.graph.row_ptr, e.graph.col, e.graph.rate,
                                  1.0, x, z);
  });
  double t_axpy_s = time_best_of(5, [&] { sep::kernels::serial::axpy(1.1, a, y); });
  double t_axpy_p = time_best_of(5, [&] { sep::kernels::axpy(1.1, a, y); });

  std::printf("%-18s %12s %12s %8s\n", "kernel", "serial[s]", "openmp[s]",
              "speedup");
  std::printf("%-18s %12.6f %12.6f %8.2f\n", "dot", t_dot_s, t_dot_p,
              t_dot_s / t_dot_p);
  std::printf("%-18s %12.6f %12.6f %8.2f\n", "laplacian_apply", t_spmv_s,
              t_spmv_p, t_spmv_s / t_spmv_p);
  std::printf("%-18s %12.6f %12.6f %8.2f\n", "axpy", t_axpy_s, t_axpy_p,
              t_axpy_s / t_axpy_p);

  // Replica loop: MSD walks, serial vs parallel thread setting.
  auto ring = sep::env::gen_zd_conductance(1, 4096,
                                           sep::env::ScalarLaw::uniform(1, 2), 3);
  auto run_msd = [&] {
    auto est = sep::homog::msd_diffusivity(ring, 50.0, 4000, 11);
    volatile double v = est.estimate.at(0, 0);
    (void)v;
  };
#ifdef _OPENMP
  int save = omp_get_max_threads();
  omp_set_num_threads(1);
  double t_msd_s = time_best_of(3, run_msd);
  omp_set_num_threads(save);
#else
  double t_msd_s = time_best_of(3, run_msd);
#endif
  double t_msd_p = time_best_of(3, run_msd);
  std::printf("%-18s %12.6f %12.6f %8.2f\n", "msd replicas", t_msd_s, t_msd_p,
              t_msd_s / t_msd_p);
  return 0;
}
