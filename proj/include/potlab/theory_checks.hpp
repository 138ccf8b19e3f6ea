#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "potlab/exact_ot.hpp"
#include "potlab/measures.hpp"
#include "potlab/rng.hpp"

namespace potlab {

using PointMap = std::function<std::vector<double>(std::span<const double>)>;

// One numerical verification of a formal claim. Equality checks pass when
// |lhs - rhs| <= tolerance, bound checks when lhs <= rhs + tolerance;
// details["bound_check"] = 1 marks the latter.
struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::map<std::string, double> details;
};

// W_c(P_X, pushforward(P_Z, g)) against W_{c_G}(P_X, P_Z) with
// c_G(x, z) = c(x, G(z)); equal for Dirac decoders, to LP precision.
CheckReport verify_theorem1(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                            const PointMap& g, const CostKind& cost);

// Builds gamma(x_i, G(z_j)) = q_ij * p_x(i) from a conditional Q(Z|X) whose
// aggregated posterior matches p_z, checks both marginals, and checks that
// its transport cost upper-bounds the LP optimum. Throws if q rows are not
// simplex vectors or the aggregation constraint is violated.
CheckReport verify_factorization(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                                 const PointMap& g, const Matrix& q,
                                 const CostKind& cost);

// Gaussian-decoder upper bound: empirical W_2^2(P_X, P_G^sigma) against
// d*sigma^2 + W_{c_G}(P_X, P_Z), averaged over 10 sampling seeds with a
// 3-stderr plus 5 percent bias allowance.
CheckReport verify_corollary1(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                              const PointMap& g, double sigma2,
                              std::size_t n_samples, Rng rng);

// Var[G(Z) + sigma eps] against sigma^2 + Var[G(Z)] on shared draws.
CheckReport verify_lemma2(const PointMap& g, std::size_t n, double sigma2, Rng rng);

// Strong duality for the euclidean cost plus the 1-Lipschitz restriction of
// the source potentials to support pairs.
CheckReport duality_gap_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Named randomized suites behind `potlab check <name>`; instances run in
// parallel with per-instance generators. Throws std::invalid_argument for an
// unknown name (message lists the valid ones).
std::vector<std::string> check_suite_names();
std::vector<CheckReport> run_check_suite(const std::string& name, std::size_t instances,
                                         std::uint64_t base_seed);

// Random test net Z -> X used by the randomized suites (2 weight layers).
MlpNet random_map_net(std::size_t in_dim, std::size_t out_dim, Rng& rng);
PointMap net_as_map(const MlpNet& net);

}  // namespace potlab
