// Benchmark comparing the serial reference kernels against the OpenMP ones:
// pairwise cost matrices, batched net evaluation, and one full exact-OT solve
// per size to put the kernel times in context.

#include <chrono>
#include <cstdio>

#include "potlab/exact_ot.hpp"
#include "potlab/kernels.hpp"
#include "potlab/measures.hpp"
#include "potlab/nn.hpp"
#include "potlab/transport_simplex.hpp"

using namespace potlab;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    f();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

}  // namespace

int main() {
  Rng rng(42);

  std::printf("%-34s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  for (std::size_t n : {256u, 1024u, 2048u}) {
    GaussianData g{{0.0, 0.0}, {1.0, 1.0}};
    DiscreteMeasure a = sample_toy(g, n, rng);
    DiscreteMeasure b = sample_toy(g, n, rng);

    Matrix out;
    double ts = time_best_of(3, [&] {
      kernels::pairwise_sq_dist(a.flat_points(), n, b.flat_points(), n, 2, out,
                                kernels::Exec::Serial);
    });
    double tp = time_best_of(3, [&] {
      kernels::pairwise_sq_dist(a.flat_points(), n, b.flat_points(), n, 2, out,
                                kernels::Exec::Parallel);
    });
    std::printf("pairwise_sq_dist %5zu x %-5zu       %10.2f %10.2f %7.2fx\n", n, n, ts,
                tp, ts / tp);

    if (n <= 1024) {
      auto t0 = Clock::now();
      TransportPlan plan = solve_primal(a, b, SqEuclidean{});
      std::printf("  (exact OT solve %4zu x %-4zu: %.1f ms, value %.6f)\n", n, n,
                  ms_since(t0), plan.value);
    }
  }

  MlpNet net({2, 64, 64, 2}, {Activation::Tanh, Activation::Tanh, Activation::Linear},
             rng);
  for (std::size_t n : {1024u, 16384u}) {
    GaussianData g{{0.0, 0.0}, {1.0, 1.0}};
    DiscreteMeasure xs = sample_toy(g, n, rng);
    std::vector<double> out;
    double ts = time_best_of(3,
                             [&] { net.eval_batch(xs.flat_points(), n, out, kernels::Exec::Serial); });
    double tp = time_best_of(
        3, [&] { net.eval_batch(xs.flat_points(), n, out, kernels::Exec::Parallel); });
    std::printf("mlp eval_batch 2-64-64-2 n=%-6zu  %10.2f %10.2f %7.2fx\n", n, ts, tp,
                ts / tp);
  }

  return 0;
}
