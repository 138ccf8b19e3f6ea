#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "potlab/exact_ot.hpp"
#include "potlab/measures.hpp"
#include "potlab/rng.hpp"

using namespace potlab;

namespace {

// Exhaustive oracle: (1/n) min over all permutations. Only for n <= 8.
double permutation_oracle(const Matrix& c) {
  std::size_t n = c.rows;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / double(n);
}

DiscreteMeasure random_uniform(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> pts(n * d);
  for (auto& v : pts) v = 2.0 * rng.normal();
  return DiscreteMeasure::uniform(std::move(pts), d);
}

DiscreteMeasure random_weighted(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> pts(n * d), w(n);
  for (auto& v : pts) v = 2.0 * rng.normal();
  for (auto& v : w) v = rng.uniform(0.1, 1.0);
  return DiscreteMeasure(std::move(pts), d, std::move(w));
}

}  // namespace

TEST_CASE("cost_matrix: hand values") {
  auto m0 = DiscreteMeasure::dirac({0.0});
  auto m3 = DiscreteMeasure::dirac({3.0});
  CHECK(cost_matrix(m0, m3, Euclidean{})(0, 0) == 3.0);
  CHECK(cost_matrix(m0, m3, SqEuclidean{})(0, 0) == 9.0);

  auto a = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto b = DiscreteMeasure::from_points({{2.0}, {3.0}}, {0.5, 0.5});
  Matrix c = cost_matrix(a, b, Euclidean{});
  CHECK(c(0, 0) == 2.0);
  CHECK(c(0, 1) == 3.0);
  CHECK(c(1, 0) == 1.0);
  CHECK(c(1, 1) == 2.0);
}

TEST_CASE("cost_matrix: errors") {
  auto a = DiscreteMeasure::dirac({0.0});
  auto b = DiscreteMeasure::dirac({0.0, 0.0});
  CHECK_THROWS_AS(cost_matrix(a, b, Euclidean{}), std::invalid_argument);
  CHECK_THROWS_AS(cost_matrix(a, a, CustomCost{Matrix(2, 2)}), std::invalid_argument);
  Matrix neg(1, 1);
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(cost_matrix(a, a, CustomCost{neg}), std::invalid_argument);
}

TEST_CASE("solve_primal: dirac to dirac") {
  auto plan = solve_primal(DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({3.0}),
                           Euclidean{});
  CHECK(plan.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(plan.gamma(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_primal: two-point example, brute-forced") {
  auto a = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto b = DiscreteMeasure::from_points({{2.0}, {3.0}}, {0.5, 0.5});
  Matrix c = cost_matrix(a, b, Euclidean{});
  // Both matchings cost 2: identity (2+2)/2, swap (3+1)/2.
  CHECK(permutation_oracle(c) == doctest::Approx(2.0));
  auto plan = solve_primal(a, b, c);
  CHECK(plan.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("solve_primal: identical measures cost zero") {
  Rng rng(3);
  auto a = random_uniform(9, 2, rng);
  CHECK(solve_primal(a, a, SqEuclidean{}).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(solve_primal(a, a, Euclidean{}).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solve_primal: marginals, vertex support and determinism") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 2 + rng.index(20), m = 2 + rng.index(20);
    auto a = random_weighted(n, 2, rng);
    auto b = random_weighted(m, 2, rng);
    Matrix c = cost_matrix(a, b, SqEuclidean{});
    auto plan = solve_primal(a, b, c);

    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(plan.gamma(i, j) >= 0.0);
        row += plan.gamma(i, j);
      }
      CHECK(std::abs(row - a.weights()[i]) <= 1e-9);
    }
    for (std::size_t j = 0; j < m; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += plan.gamma(i, j);
      CHECK(std::abs(col - b.weights()[j]) <= 1e-9);
    }

    double recomputed = 0.0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        recomputed += plan.gamma(i, j) * c(i, j);
        if (plan.gamma(i, j) > 0.0) ++positive;
      }
    CHECK(std::abs(recomputed - plan.value) <= 1e-9);
    CHECK(positive <= n + m - 1);

    auto plan2 = solve_primal(a, b, c);
    CHECK(plan2.value == plan.value);  // bit-identical rerun
  }
}

TEST_CASE("assignment oracle: exhaustive agreement for n <= 8") {
  Rng rng(5);
  for (std::size_t n : {2u, 3u, 4u, 5u, 6u}) {
    for (int trial = 0; trial < 4; ++trial) {
      auto a = random_uniform(n, 2, rng);
      auto b = random_uniform(n, 2, rng);
      Matrix c = cost_matrix(a, b, trial % 2 ? CostKind{Euclidean{}}
                                             : CostKind{SqEuclidean{}});
      double exhaustive = permutation_oracle(c);
      double hung = assignment_oracle(a, b, c);
      double lp = solve_primal(a, b, c).value;
      CHECK(std::abs(hung - exhaustive) <= 1e-9);
      CHECK(std::abs(lp - exhaustive) <= 1e-9);
    }
  }
}

TEST_CASE("assignment oracle: input validation") {
  Rng rng(9);
  auto a = random_uniform(4, 1, rng);
  auto b = random_uniform(5, 1, rng);
  CHECK_THROWS_AS(assignment_oracle(a, b, Matrix(4, 5)), std::invalid_argument);
  auto w = random_weighted(4, 1, rng);
  CHECK_THROWS_AS(assignment_oracle(w, a, cost_matrix(w, a, Euclidean{})),
                  std::invalid_argument);
}

TEST_CASE("dual certificate: two-point example and rejection of bad plans") {
  auto a = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto b = DiscreteMeasure::from_points({{2.0}, {3.0}}, {0.5, 0.5});
  Matrix c = cost_matrix(a, b, Euclidean{});
  auto plan = solve_primal(a, b, c);
  auto cert = dual_potentials(plan, c, a, b);
  CHECK(cert.dual_value == doctest::Approx(2.0).epsilon(1e-12));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(cert.potentials.f[i] + cert.potentials.g[j] <= c(i, j) + 1e-9);
  CHECK(cert.lipschitz_violation <= 1e-9);

  // A feasible but suboptimal plan must be rejected: route 0 -> 3 and 1 -> 2
  // (value 2.5 > 2 because... both matchings cost 2; use the product coupling
  // instead, value (2+3+1+2)/4 = 2).  Perturb the plan off the optimum by
  // making it infeasible-for-optimality: swap mass between tight cells of a
  // strictly-better instance.
  auto b2 = DiscreteMeasure::from_points({{0.5}, {3.0}}, {0.5, 0.5});
  Matrix c2 = cost_matrix(a, b2, Euclidean{});
  TransportPlan bad;
  bad.gamma = Matrix(2, 2);
  bad.gamma(0, 1) = 0.5;  // 0 -> 3 (cost 3)
  bad.gamma(1, 0) = 0.5;  // 1 -> 0.5 (cost 0.5), total 1.75; optimal is 1.25
  bad.value = 0.5 * 3.0 + 0.5 * 0.5;
  CHECK(solve_primal(a, b2, c2).value == doctest::Approx(1.25));
  CHECK_THROWS_AS(dual_potentials(bad, c2, a, b2), std::invalid_argument);
}

TEST_CASE("dual certificate: strong duality on a random 8x8 uniform instance") {
  Rng rng(11);
  auto a = random_uniform(8, 2, rng);
  auto b = random_uniform(8, 2, rng);
  Matrix c = cost_matrix(a, b, Euclidean{});
  auto plan = solve_primal(a, b, c);
  auto cert = dual_potentials(plan, c, a, b);
  CHECK(std::abs(cert.dual_value - plan.value) <= 1e-9);
}

TEST_CASE("metric properties on uniform equal-size instances") {
  Rng rng(29);
  for (int trial = 0; trial < 8; ++trial) {
    std::size_t n = 2 + rng.index(10);
    auto a = random_uniform(n, 2, rng);
    auto b = random_uniform(n, 2, rng);
    auto c = random_uniform(n, 2, rng);
    double ab = solve_primal(a, b, Euclidean{}).value;
    double ba = solve_primal(b, a, Euclidean{}).value;
    double ac = solve_primal(a, c, Euclidean{}).value;
    double cb = solve_primal(c, b, Euclidean{}).value;
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("translation smoke: finite nonnegative values under target shifts") {
  Rng rng(31);
  auto a = random_uniform(12, 2, rng);
  for (double t : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
    std::vector<double> shifted = a.flat_points();
    for (std::size_t i = 0; i < shifted.size(); i += 2) shifted[i] += t;
    auto b = DiscreteMeasure::uniform(shifted, 2);
    double v = solve_primal(a, b, SqEuclidean{}).value;
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    // Squared-cost translation of a measure against itself costs exactly t^2
    // per unit mass (mass stays matched under the identity coupling).
    CHECK(v <= t * t + 1e-9);
  }
}

TEST_CASE("tiny weights are clamped before the solve") {
  auto a = DiscreteMeasure::from_points({{0.0}, {1.0}, {2.0}}, {0.5, 1e-16, 0.5});
  auto b = DiscreteMeasure::from_points({{0.0}, {2.0}}, {0.5, 0.5});
  auto plan = solve_primal(a, b, SqEuclidean{});
  CHECK(plan.value == doctest::Approx(0.0).epsilon(1e-10));
  for (std::size_t j = 0; j < 2; ++j) CHECK(plan.gamma(1, j) == 0.0);
}
