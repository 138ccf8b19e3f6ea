#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "potlab/kernels.hpp"
#include "potlab/matrix.hpp"
#include "potlab/measures.hpp"

namespace potlab {

// Ground cost between support points. The two metric kinds are evaluated from
// coordinates; Custom carries an explicit nonnegative matrix.
struct SqEuclidean {};
struct Euclidean {};
struct CustomCost {
  Matrix matrix;
};
using CostKind = std::variant<SqEuclidean, Euclidean, CustomCost>;

// C_ij = c(x_i, y_j). Throws on dimension mismatch or a bad custom matrix.
Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const CostKind& kind,
                   kernels::Exec exec = kernels::Exec::Parallel);

// Coupling with prescribed marginals, at a vertex of the transportation
// polytope (at most n+m-1 strictly positive entries).
struct TransportPlan {
  Matrix gamma;        // n x m, nonnegative
  double value = 0.0;  // sum_ij gamma_ij C_ij
};

// Potentials certifying LP optimality: f_i + g_j <= C_ij everywhere, with
// equality on the support of the optimal plan.
struct DualPotentials {
  std::vector<double> f;
  std::vector<double> g;
};

struct DualCertificate {
  DualPotentials potentials;
  double dual_value = 0.0;
  // Max over source support pairs of |f_i - f_k| - ||x_i - x_k||; meaningful
  // for the euclidean cost, where the tightened potentials restrict a
  // 1-Lipschitz witness to the support.
  double lipschitz_violation = 0.0;
};

// Exact optimal transport between discrete measures. Weights below 1e-15 are
// clamped to zero (and the marginals renormalized) before the solve to avoid
// a numerically singular basis. Deterministic: identical inputs give the
// identical plan.
TransportPlan solve_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const Matrix& cost);

// Convenience overload building the cost matrix internally.
TransportPlan solve_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const CostKind& kind);

// Reconstructs dual potentials from an optimal plan: propagates tightness on
// the support graph, aligns the connected components by a shortest-path
// adjustment, then applies a c-transform pass. Rejects plans whose duality
// gap exceeds 1e-6 (std::invalid_argument).
DualCertificate dual_potentials(const TransportPlan& plan, const Matrix& cost,
                                const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu);

// Independent Hungarian-algorithm oracle for equal-size uniform marginals:
// (1/n) * min over permutations of sum_i C_{i,pi(i)}. Used to cross-check
// solve_primal. Throws unless both measures are uniform with n == m.
double assignment_oracle(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const Matrix& cost);

// Min-cost assignment value of an n x n matrix (the oracle's engine).
double hungarian(const Matrix& cost);

}  // namespace potlab
