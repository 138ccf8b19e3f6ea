#pragma once

#include <cstddef>
#include <span>

#include "potlab/matrix.hpp"

namespace potlab::kernels {

// Execution policy for the data-parallel kernels. Every parallel kernel has a
// serial twin that computes the identical result (bit for bit); the serial
// versions are the reference implementations used by the tests and the
// benchmark target.
enum class Exec { Serial, Parallel };

// C(i,j) = ||a_i - b_j||^2 with a: na*d, b: nb*d row-major.
void pairwise_sq_dist_serial(std::span<const double> a, std::size_t na,
                             std::span<const double> b, std::size_t nb,
                             std::size_t d, Matrix& out);
void pairwise_sq_dist(std::span<const double> a, std::size_t na,
                      std::span<const double> b, std::size_t nb, std::size_t d,
                      Matrix& out, Exec exec = Exec::Parallel);

// C(i,j) = ||a_i - b_j||.
void pairwise_dist_serial(std::span<const double> a, std::size_t na,
                          std::span<const double> b, std::size_t nb,
                          std::size_t d, Matrix& out);
void pairwise_dist(std::span<const double> a, std::size_t na,
                   std::span<const double> b, std::size_t nb, std::size_t d,
                   Matrix& out, Exec exec = Exec::Parallel);

}  // namespace potlab::kernels
