#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "potlab/autodiff.hpp"
#include "potlab/nn.hpp"
#include "potlab/rng.hpp"

using namespace potlab;

TEST_CASE("tape: quadratic derivative") {
  Tape t;
  Var w = t.leaf(3.0);
  Var loss = t.square(w);
  CHECK(t.value(loss) == 9.0);
  t.backward(loss);
  CHECK(t.adjoint(w) == 6.0);
}

TEST_CASE("tape: chain rule through a linear decoder") {
  // loss = (c*z - x)^2 at c=2, x=1, z=1: d/dc = 2(cz - x) z = 2.
  Tape t;
  Var c = t.leaf(2.0);
  Var z = t.constant(1.0);
  Var x = t.constant(1.0);
  Var loss = t.square(t.sub(t.mul(c, z), x));
  t.backward(loss);
  CHECK(t.adjoint(c) == 2.0);
}

TEST_CASE("tape: double backward rejected, reset recovers") {
  Tape t;
  Var w = t.leaf(1.0);
  Var loss = t.square(w);
  t.backward(loss);
  CHECK_THROWS_AS(t.backward(loss), std::runtime_error);
  CHECK_THROWS_AS(t.square(w), std::runtime_error);
  t.reset();
  Var w2 = t.leaf(2.0);
  t.backward(t.square(w2));
  CHECK(t.adjoint(w2) == 4.0);
}

TEST_CASE("forward: single-layer hand values") {
  Rng rng(0);
  MlpNet lin({1, 1}, {Activation::Linear}, rng);
  lin.params().data()[0] = 2.0;  // weight
  lin.params().data()[1] = 1.0;  // bias
  auto y = lin.eval(std::vector<double>{3.0});
  CHECK(y[0] == 7.0);

  MlpNet relu({1, 1}, {Activation::Relu}, rng);
  relu.params().data()[0] = 1.0;
  relu.params().data()[1] = 0.0;
  CHECK(relu.eval(std::vector<double>{-5.0})[0] == 0.0);

  MlpNet th({1, 1}, {Activation::Tanh}, rng);
  th.params().data()[0] = 1.0;
  th.params().data()[1] = 0.0;
  CHECK(th.eval(std::vector<double>{0.0})[0] == 0.0);
}

TEST_CASE("forward: deterministic and identical on tape and value paths") {
  Rng rng(77);
  MlpNet net({2, 16, 16, 2}, {Activation::Tanh, Activation::Tanh, Activation::Linear},
             rng);
  std::vector<double> x{0.3, -1.2};
  auto y1 = net.eval(x);
  auto y2 = net.eval(x);
  CHECK(y1 == y2);

  Tape t;
  auto params = net.make_param_vars(t);
  std::vector<Var> xv{t.constant(x[0]), t.constant(x[1])};
  auto yv = net.forward(t, xv, params);
  CHECK(t.value(yv[0]) == y1[0]);
  CHECK(t.value(yv[1]) == y1[1]);
}

TEST_CASE("grad_check: exact for linear net with quadratic loss") {
  Rng rng(5);
  MlpNet net({2, 1}, {Activation::Linear}, rng);
  auto build = [](Tape& t, const MlpNet& n, std::span<const Var> params) {
    std::vector<Var> x{t.constant(0.7), t.constant(-0.4)};
    auto y = n.forward(t, x, params);
    return t.square(t.add_const(y[0], -0.9));
  };
  auto res = grad_check(net, build);
  CHECK(res.max_rel_err <= 1e-9);
}

TEST_CASE("grad_check: random mlp against finite differences") {
  Rng rng(13);
  MlpNet net({2, 16, 16, 2},
             {Activation::Tanh, Activation::Tanh, Activation::Linear}, rng);
  // Batch of 8 squared-error samples.
  std::vector<double> xs(8 * 2), ys(8 * 2);
  for (auto& v : xs) v = rng.normal();
  for (auto& v : ys) v = rng.normal();
  auto build = [&](Tape& t, const MlpNet& n, std::span<const Var> params) {
    std::vector<Var> losses;
    for (std::size_t i = 0; i < 8; ++i) {
      std::vector<Var> x{t.constant(xs[2 * i]), t.constant(xs[2 * i + 1])};
      auto y = n.forward(t, x, params);
      Var l = t.add(t.square(t.add_const(y[0], -ys[2 * i])),
                    t.square(t.add_const(y[1], -ys[2 * i + 1])));
      losses.push_back(l);
    }
    return t.mean(losses);
  };
  auto res = grad_check(net, build);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("grad_check: relu net away from kinks") {
  Rng rng(21);
  const double h = 1e-5;
  for (int attempt = 0; attempt < 50; ++attempt) {
    MlpNet net({2, 8, 1}, {Activation::Relu, Activation::Linear}, rng);
    std::vector<double> x{rng.normal(), rng.normal()};
    if (net.min_abs_relu_preact(x) < 10.0 * h) continue;  // resample at kinks
    auto build = [&](Tape& t, const MlpNet& n, std::span<const Var> params) {
      std::vector<Var> xv{t.constant(x[0]), t.constant(x[1])};
      return t.square(n.forward(t, xv, params)[0]);
    };
    auto res = grad_check(net, build, h);
    CHECK(res.max_rel_err <= 1e-5);
    return;
  }
  FAIL("no kink-free sample found in 50 attempts");
}

TEST_CASE("autodiff vs finite differences across 50 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    MlpNet net({1, 8, 1}, {Activation::Tanh, Activation::Linear}, rng);
    double x0 = rng.normal();
    auto build = [&](Tape& t, const MlpNet& n, std::span<const Var> params) {
      std::vector<Var> x{t.constant(x0)};
      return t.square(n.forward(t, x, params)[0]);
    };
    worst = std::max(worst, grad_check(net, build).max_rel_err);
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("optimizer: sgd steps") {
  std::vector<double> p{1.0};
  auto opt = Optimizer::sgd(0.1);
  opt.step(p, std::vector<double>{2.0});
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));

  auto frozen = Optimizer::sgd(0.0);
  std::vector<double> q{1.0};
  frozen.step(q, std::vector<double>{123.0});
  CHECK(q[0] == 1.0);
}

TEST_CASE("optimizer: adam drives a 1d quadratic to zero") {
  // The optimizer run is its own oracle: w = 1.0 shrinks below 0.01 within
  // 1000 default-config steps on f(w) = w^2.
  std::vector<double> w{1.0};
  auto opt = Optimizer::adam({});
  for (int i = 0; i < 1000; ++i) opt.step(w, std::vector<double>{2.0 * w[0]});
  CHECK(std::abs(w[0]) < 0.01);
}

TEST_CASE("optimizer: non-finite gradient aborts the step") {
  std::vector<double> p{1.0};
  auto opt = Optimizer::adam({});
  CHECK_THROWS_AS(opt.step(p, std::vector<double>{std::nan("")}), std::runtime_error);
  CHECK(p[0] == 1.0);
}

TEST_CASE("param vector: offsets must partition") {
  CHECK_THROWS_AS(ParamVector({{2, 2, 1, 5}}, std::vector<double>(6, 0.0)),
                  std::invalid_argument);
}
