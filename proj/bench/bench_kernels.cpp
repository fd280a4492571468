// Timing comparison of the serial reference kernels against the OpenMP
// paths (and the O(n log n) 1-D distance sums). The parallel results must
// be bitwise equal to the serial ones; the table prints a checksum match
// column to make that visible.

#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pushforward/distributions.hpp"
#include "pushforward/flows.hpp"
#include "pushforward/mlp.hpp"
#include "pushforward/pairwise.hpp"
#include "pushforward/rng.hpp"

using namespace pf;

namespace {

double now_seconds() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return static_cast<double>(clock()) / CLOCKS_PER_SEC;
#endif
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_seconds();
    f();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void bench_pairwise(std::size_t n) {
  Rng rng(7);
  Tensor x = sample(StdGaussian{1}, n, rng);
  Tensor y = sample(Uniform{0.0, 1.0}, n, rng);
  KernelSpec gauss{KernelSpec::Type::Gaussian, 1.0};

  double serial_value = 0.0, parallel_value = 0.0;
  double ts = time_best_of(3, [&] {
    serial_value = pairwise_kernel_sum(x, y, gauss, false, Exec::Serial);
  });
  double tp = time_best_of(3, [&] {
    parallel_value = pairwise_kernel_sum(x, y, gauss, false, Exec::Parallel);
  });
  std::printf("pairwise gauss   n=%6zu  serial %8.4fs  parallel %8.4fs  speedup %5.2fx  bitwise %s\n",
              n, ts, tp, ts / tp, serial_value == parallel_value ? "yes" : "NO");

  double fast = 0.0, quad = 0.0;
  double tf = time_best_of(3, [&] { fast = sum_abs_cross_1d(x, y); });
  double tq = time_best_of(3, [&] {
    quad = pairwise_kernel_sum(x, y, KernelSpec{KernelSpec::Type::Distance, 1.0}, false,
                               Exec::Serial);
  });
  std::printf("distance sums    n=%6zu  O(n^2) %8.4fs  sort-path %8.4fs  speedup %5.0fx  rel.err %.2e\n",
              n, tq, tf, tq / tf, std::abs(fast - quad) / quad);
}

void bench_sde(std::size_t n) {
  Rng rng(11);
  Tensor x0 = Tensor::full({n, 1}, 2.0);
  ParticleEnsemble start{x0, 0.0};
  ParticleEnsemble out_s, out_p;
  double ts = time_best_of(2, [&] {
    Rng r(13);
    out_s = simulate_sde(QuadraticPotential{}, start, 1.0, 1e-3, r, Exec::Serial);
  });
  double tp = time_best_of(2, [&] {
    Rng r(13);
    out_p = simulate_sde(QuadraticPotential{}, start, 1.0, 1e-3, r, Exec::Parallel);
  });
  bool same = out_s.positions.data == out_p.positions.data;
  std::printf("sde (1k steps)   n=%6zu  serial %8.4fs  parallel %8.4fs  speedup %5.2fx  bitwise %s\n",
              n, ts, tp, ts / tp, same ? "yes" : "NO");
}

void bench_mlp(std::size_t batch) {
  Rng rng(5);
  MlpParams model = MlpParams::init({1, 64, 64, 1}, Activation::Tanh,
                                    OutputActivation::Identity, rng);
  Tensor x = sample(StdGaussian{1}, batch, rng);
  Tensor out;
  double t = time_best_of(5, [&] { out = mlp_forward(model, x); });
  std::printf("mlp fwd 1-64-64-1 batch=%6zu  %8.4fs\n", batch, t);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; parallel paths run serially\n");
#endif
  for (std::size_t n : {2048u, 8192u}) bench_pairwise(n);
  for (std::size_t n : {4096u, 16384u}) bench_sde(n);
  for (std::size_t b : {512u, 8192u}) bench_mlp(b);
  return 0;
}
