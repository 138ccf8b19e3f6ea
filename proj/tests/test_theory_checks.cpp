#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "potlab/theory_checks.hpp"

using namespace potlab;

namespace {

PointMap affine_1d(double a, double b) {
  return [a, b](std::span<const double> z) { return std::vector<double>{a * z[0] + b}; };
}

}  // namespace

TEST_CASE("theorem1: self-transport is zero") {
  auto p_z = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto g = affine_1d(2.0, 0.0);
  auto p_x = pushforward(p_z, g);
  auto rep = verify_theorem1(p_x, p_z, g, SqEuclidean{});
  CHECK(rep.passed);
  CHECK(rep.lhs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("theorem1: hand-enumerated two-point instance") {
  // p_x uniform{0,4}, p_z uniform{0,1}, g(z) = 2z, squared cost.
  // Couplings of two 2-point uniform measures: id matching (0-0, 4-2) costs
  // (0 + 4)/2 = 2; swap costs (4 + 16)/2 = 10. Optimum 2.
  auto p_x = DiscreteMeasure::from_points({{0.0}, {4.0}}, {0.5, 0.5});
  auto p_z = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto rep = verify_theorem1(p_x, p_z, affine_1d(2.0, 0.0), SqEuclidean{});
  CHECK(rep.passed);
  CHECK(rep.lhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("theorem1: randomized suite passes") {
  auto reports = run_check_suite("theorem1", 25, 123);
  for (const auto& r : reports) {
    CHECK(r.passed);
    CHECK(r.abs_gap <= 1e-9);
  }
}

TEST_CASE("factorization: product coupling is feasible, plan conditional is tight") {
  Rng rng(31);
  auto p_x = DiscreteMeasure::from_points({{0.0}, {1.0}, {3.0}}, {0.2, 0.3, 0.5});
  auto p_z = DiscreteMeasure::from_points({{-1.0}, {2.0}}, {0.6, 0.4});
  auto g = affine_1d(1.0, 0.5);

  Matrix q_prod(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) q_prod(i, j) = p_z.weights()[j];
  auto rep = verify_factorization(p_x, p_z, g, q_prod, SqEuclidean{});
  CHECK(rep.passed);
  CHECK(rep.lhs <= rep.rhs + 1e-9);

  // Conditional derived from the optimal plan attains the optimum.
  Matrix c(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double img = p_z.point(j)[0] + 0.5;
      double d = p_x.point(i)[0] - img;
      c(i, j) = d * d;
    }
  auto plan = solve_primal(p_x, p_z, CustomCost{c});
  Matrix q_plan(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      q_plan(i, j) = plan.gamma(i, j) / p_x.weights()[i];
  auto rep2 = verify_factorization(p_x, p_z, g, q_plan, SqEuclidean{});
  CHECK(rep2.passed);
  CHECK(std::abs(rep2.rhs - rep2.lhs) <= 1e-9);
}

TEST_CASE("factorization: aggregation violation rejected") {
  auto p_x = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto p_z = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  Matrix q(2, 2);
  q(0, 0) = 1.0;
  q(1, 0) = 1.0;  // everything on one z column but p_z is non-degenerate
  CHECK_THROWS_AS(verify_factorization(p_x, p_z, affine_1d(1.0, 0.0), q, SqEuclidean{}),
                  std::invalid_argument);

  Matrix bad_rows(2, 2);
  bad_rows(0, 0) = 0.7;  // row does not sum to 1
  CHECK_THROWS_AS(
      verify_factorization(p_x, p_z, affine_1d(1.0, 0.0), bad_rows, SqEuclidean{}),
      std::invalid_argument);
}

TEST_CASE("factorization: randomized suite passes") {
  auto reports = run_check_suite("factorization", 12, 7);
  for (const auto& r : reports) CHECK(r.passed);
}

TEST_CASE("corollary1: self-model bound holds with sigma^2 slack") {
  Rng rng(41);
  auto p_z = DiscreteMeasure::from_points({{-1.0}, {0.0}, {1.0}}, {1.0, 1.0, 1.0});
  auto g = affine_1d(1.0, 0.0);
  double sigma2 = 0.25;
  // Data drawn from the model itself: the bound then carries ~d sigma^2 slack.
  Rng data_rng(43);
  std::vector<double> pts;
  for (int i = 0; i < 64; ++i) {
    auto z = p_z.point(data_rng.categorical(p_z.weights()));
    pts.push_back(z[0] + std::sqrt(sigma2) * data_rng.normal());
  }
  auto p_x = DiscreteMeasure::uniform(std::move(pts), 1);
  auto rep = verify_corollary1(p_x, p_z, g, sigma2, 128, rng);
  CHECK(rep.passed);
  CHECK(rep.lhs <= rep.rhs + rep.tolerance);
}

TEST_CASE("corollary1: 1d gaussian fixture") {
  Rng rng(47);
  auto p_x_src = GaussianData{{0.0}, {1.0}};
  Rng data_rng(49);
  auto p_x = sample_toy(p_x_src, 96, data_rng);
  auto p_z = sample_toy(p_x_src, 48, data_rng);
  auto rep = verify_corollary1(p_x, p_z, affine_1d(1.0, 0.0), 0.25, 128, rng);
  CHECK(rep.passed);
  CHECK(rep.details.at("d_sigma2") == doctest::Approx(0.25));
}

TEST_CASE("corollary1: parameter validation") {
  Rng rng(0);
  auto m = DiscreteMeasure::from_points({{0.0}}, {1.0});
  CHECK_THROWS_AS(verify_corollary1(m, m, affine_1d(1.0, 0.0), 0.0, 128, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(verify_corollary1(m, m, affine_1d(1.0, 0.0), 0.1, 32, rng),
                  std::invalid_argument);
}

TEST_CASE("lemma2: doubling map variance") {
  // g(z) = 2z, z ~ N(0,1), sigma^2 = 0.25: Var[Y] = 0.25 + 4 = 4.25.
  auto rep = verify_lemma2(affine_1d(2.0, 0.0), 100000, 0.25, Rng(51));
  CHECK(rep.passed);
  CHECK(rep.rhs == doctest::Approx(4.25).epsilon(0.05));
}

TEST_CASE("lemma2: degenerate noise and constant map") {
  auto rep = verify_lemma2(affine_1d(1.5, 0.0), 20000, 0.0, Rng(53));
  CHECK(rep.passed);
  CHECK(rep.abs_gap <= 1e-12);  // shared draws, sigma = 0: identical samples

  auto rep2 = verify_lemma2(affine_1d(0.0, 3.0), 20000, 0.5, Rng(55));
  CHECK(rep2.passed);
  CHECK(rep2.lhs == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("lemma2: n too small rejected") {
  CHECK_THROWS_AS(verify_lemma2(affine_1d(1.0, 0.0), 100, 0.1, Rng(0)),
                  std::invalid_argument);
}

TEST_CASE("duality gap: two-point example and random instances") {
  auto a = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto b = DiscreteMeasure::from_points({{2.0}, {3.0}}, {0.5, 0.5});
  auto rep = duality_gap_check(a, b);
  CHECK(rep.passed);
  CHECK(rep.lhs == doctest::Approx(2.0).epsilon(1e-12));

  auto self_rep = duality_gap_check(a, a);
  CHECK(self_rep.passed);
  CHECK(self_rep.lhs == doctest::Approx(0.0).epsilon(1e-12));

  auto reports = run_check_suite("duality", 20, 99);
  for (const auto& r : reports) {
    CHECK(r.passed);
    CHECK(r.abs_gap <= 1e-9);
    CHECK(r.details.at("lipschitz_violation") <= 1e-9);
  }
}

TEST_CASE("check suite: unknown names rejected with the valid list") {
  CHECK_THROWS_WITH_AS(run_check_suite("nope", 3, 0),
                       doctest::Contains("theorem1"), std::invalid_argument);
  CHECK_THROWS_AS(run_check_suite("theorem1", 0, 0), std::invalid_argument);
}

TEST_CASE("check reports are deterministic given the seed") {
  auto a = run_check_suite("theorem1", 5, 42);
  auto b = run_check_suite("theorem1", 5, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lhs == b[i].lhs);
    CHECK(a[i].rhs == b[i].rhs);
  }
}
