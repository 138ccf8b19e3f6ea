#include "potlab/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace potlab::kernels {

namespace {

inline double sq_dist(const double* x, const double* y, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double t = x[k] - y[k];
    s += t * t;
  }
  return s;
}

}  // namespace

void pairwise_sq_dist_serial(std::span<const double> a, std::size_t na,
                             std::span<const double> b, std::size_t nb,
                             std::size_t d, Matrix& out) {
  out = Matrix(na, nb);
  for (std::size_t i = 0; i < na; ++i) {
    const double* x = a.data() + i * d;
    double* row = out.data.data() + i * nb;
    for (std::size_t j = 0; j < nb; ++j) row[j] = sq_dist(x, b.data() + j * d, d);
  }
}

void pairwise_sq_dist(std::span<const double> a, std::size_t na,
                      std::span<const double> b, std::size_t nb, std::size_t d,
                      Matrix& out, Exec exec) {
  if (exec == Exec::Serial) {
    pairwise_sq_dist_serial(a, na, b, nb, d, out);
    return;
  }
  out = Matrix(na, nb);
  // Each entry is independent, so the result does not depend on scheduling.
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(na); ++i) {
    const double* x = a.data() + static_cast<std::size_t>(i) * d;
    double* row = out.data.data() + static_cast<std::size_t>(i) * nb;
    for (std::size_t j = 0; j < nb; ++j) row[j] = sq_dist(x, b.data() + j * d, d);
  }
}

void pairwise_dist_serial(std::span<const double> a, std::size_t na,
                          std::span<const double> b, std::size_t nb,
                          std::size_t d, Matrix& out) {
  pairwise_sq_dist_serial(a, na, b, nb, d, out);
  for (double& v : out.data) v = std::sqrt(v);
}

void pairwise_dist(std::span<const double> a, std::size_t na,
                   std::span<const double> b, std::size_t nb, std::size_t d,
                   Matrix& out, Exec exec) {
  if (exec == Exec::Serial) {
    pairwise_dist_serial(a, na, b, nb, d, out);
    return;
  }
  pairwise_sq_dist(a, na, b, nb, d, out, Exec::Parallel);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.data.size()); ++i)
    out.data[static_cast<std::size_t>(i)] = std::sqrt(out.data[static_cast<std::size_t>(i)]);
}

}  // namespace potlab::kernels
