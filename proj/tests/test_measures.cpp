#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "potlab/measures.hpp"
#include "potlab/serialize.hpp"

using namespace potlab;

TEST_CASE("make_discrete: uniform two-point measure") {
  auto m = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  CHECK(m.size() == 2);
  CHECK(m.dim() == 1);
  CHECK(m.weights()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.weights()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("make_discrete: weights renormalized on construction") {
  auto m = DiscreteMeasure::from_points({{2.0}, {3.0}}, {0.3, 0.7000001});
  double sum = m.weights()[0] + m.weights()[1];
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(m.weights()[0] == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(m.weights()[1] == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("make_discrete: dirac") {
  auto m = DiscreteMeasure::dirac({0.0, 0.0});
  CHECK(m.size() == 1);
  CHECK(m.dim() == 2);
  CHECK(m.weights()[0] == 1.0);
}

TEST_CASE("make_discrete: error cases") {
  CHECK_THROWS_AS(DiscreteMeasure({}, 1, {}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure({0.0}, 1, {-0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure::from_points({{0.0}, {1.0, 2.0}}, {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure({0.0, 1.0}, 1, {0.5}), std::invalid_argument);
}

TEST_CASE("sample_toy: two_points support containment") {
  Rng rng(7);
  auto m = sample_toy(TwoPointsData{0.0, 1.0, 0.5}, 4, rng);
  CHECK(m.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    double x = m.point(i)[0];
    CHECK((x == 0.0 || x == 1.0));
  }
}

TEST_CASE("sample_toy: gaussian sample mean near zero") {
  Rng rng(1);
  auto m = sample_toy(GaussianData{{0.0}, {1.0}}, 100000, rng);
  // Monte Carlo 3-sigma bound is 3/sqrt(n) ~ 0.0095; tolerance widened to 0.02.
  CHECK(std::abs(m.mean()[0]) < 0.02);
}

TEST_CASE("sample_toy: ring8 points stay near their nearest mode") {
  Ring8Data ring{};
  Rng rng(3);
  auto m = sample_toy(ring, 800, rng);
  auto centers = ring8_centers(ring.radius);
  // Brute-force nearest-mode check.
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto p = m.point(i);
    double best = 1e300;
    for (const auto& c : centers)
      best = std::min(best, std::hypot(p[0] - c[0], p[1] - c[1]));
    worst = std::max(worst, best);
  }
  CHECK(worst <= 4.0 * ring.stddev);
}

TEST_CASE("sample_toy: n = 0 rejected") {
  Rng rng(0);
  CHECK_THROWS_AS(sample_toy(Ring8Data{}, 0, rng), std::invalid_argument);
}

TEST_CASE("sample_toy: uniform weights, bit-identical resample") {
  for (std::uint64_t seed : {0ull, 9ull, 123456789ull}) {
    Rng r1(seed), r2(seed);
    auto a = sample_toy(SwissRoll2dData{}, 257, r1);
    auto b = sample_toy(SwissRoll2dData{}, 257, r2);
    CHECK(a.flat_points() == b.flat_points());
    double sum = 0.0;
    for (double w : a.weights()) {
      CHECK(w == a.weights()[0]);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("pushforward: identity and affine images") {
  auto m = DiscreteMeasure::from_points({{0.0}, {1.0}}, {0.5, 0.5});
  auto id = pushforward(m, [](std::span<const double> z) {
    return std::vector<double>{z[0]};
  });
  CHECK(id.point(0)[0] == 0.0);
  CHECK(id.point(1)[0] == 1.0);

  auto aff = pushforward(m, [](std::span<const double> z) {
    return std::vector<double>{2.0 * z[0] + 1.0};
  });
  CHECK(aff.point(0)[0] == 1.0);
  CHECK(aff.point(1)[0] == 3.0);
  CHECK(aff.weights() == m.weights());
}

TEST_CASE("pushforward: coincident images stay separate atoms") {
  auto m = DiscreteMeasure::from_points({{-1.0}, {1.0}}, {0.5, 0.5});
  auto sq = pushforward(m, [](std::span<const double> z) {
    return std::vector<double>{z[0] * z[0]};
  });
  CHECK(sq.size() == 2);
  CHECK(sq.point(0)[0] == 1.0);
  CHECK(sq.point(1)[0] == 1.0);
  CHECK(sq.weights()[0] == doctest::Approx(0.5));
  CHECK(sq.weights()[1] == doctest::Approx(0.5));
}

TEST_CASE("pushforward: non-finite image rejected") {
  auto m = DiscreteMeasure::from_points({{0.0}}, {1.0});
  CHECK_THROWS_AS(pushforward(m, [](std::span<const double>) {
                    return std::vector<double>{std::nan("")};
                  }),
                  std::invalid_argument);
}

TEST_CASE("rng: identical seeds give identical streams, split diverges") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = a.split();
  CHECK(c.seed() != a.seed());
}

TEST_CASE("measure json round trip") {
  Rng rng(11);
  auto m = sample_toy(Ring8Data{}, 17, rng);
  auto j = io::measure_to_json(m);
  auto back = io::measure_from_json(j);
  CHECK(back.dim() == m.dim());
  CHECK(back.flat_points() == m.flat_points());
  CHECK(back.weights() == m.weights());
}
