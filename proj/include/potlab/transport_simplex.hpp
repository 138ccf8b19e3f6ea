#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "potlab/matrix.hpp"

namespace potlab {

struct TransportResult {
  std::vector<double> flow;  // n*m row-major, a vertex of the polytope
  std::vector<double> f;     // source potentials, f_i + g_j <= C_ij
  std::vector<double> g;     // target potentials
  double value = 0.0;        // sum_ij flow_ij * C_ij
  std::size_t pivots = 0;
};

// Exact network simplex on the dense transportation polytope
//   min sum_ij x_ij C_ij   s.t.  sum_j x_ij = supply_i, sum_i x_ij = demand_j,
// with x >= 0. Starts from a northwest-corner basis, pivots with a
// deterministic block-search entering rule, and falls back to Bland's
// smallest-index rule when a run of degenerate pivots stalls, which rules out
// cycling. The result is a spanning-tree vertex solution together with the
// dual potentials certifying it.
//
// Throws std::invalid_argument on malformed inputs and std::runtime_error if
// the pivot cap is hit (which a feasible bounded instance never does).
TransportResult solve_transport(std::span<const double> supply,
                                std::span<const double> demand,
                                const Matrix& cost);

}  // namespace potlab
