#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "potlab/objectives.hpp"

using namespace potlab;

namespace {

MlpNet explicit_net(std::vector<std::size_t> widths, std::vector<Activation> acts,
                    std::vector<double> params) {
  return MlpNet(std::move(widths), std::move(acts), std::move(params));
}

// Single linear layer y = W x + b with W row-major.
MlpNet linear_net(std::size_t in, std::size_t out, std::vector<double> w,
                  std::vector<double> b) {
  std::vector<double> params = std::move(w);
  params.insert(params.end(), b.begin(), b.end());
  return explicit_net({in, out}, {Activation::Linear}, std::move(params));
}

MlpNet identity_net(std::size_t d) {
  std::vector<double> w(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) w[i * d + i] = 1.0;
  return linear_net(d, d, std::move(w), std::vector<double>(d, 0.0));
}

MlpNet zero_net(std::size_t in, std::size_t out) {
  return linear_net(in, out, std::vector<double>(in * out, 0.0),
                    std::vector<double>(out, 0.0));
}

Batch make_batch(std::vector<std::vector<double>> rows) {
  Batch b(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), b.row(i).begin());
  return b;
}

}  // namespace

TEST_CASE("gan_penalty: constant half discriminator gives -log 4") {
  MlpNet disc = zero_net(2, 1);  // raw 0 -> sigmoid 0.5
  Rng rng(1);
  Batch q = sample_prior(16, 2, rng), p = sample_prior(16, 2, rng);
  double v = gan_penalty(q, p, disc, GanMode::EvalPenalty);
  CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("gan_penalty: perfect separation approaches zero") {
  // 1D batches at +-10 with a steep slope; probabilities hit the 1e-7 clamp.
  MlpNet disc = linear_net(1, 1, {100.0}, {0.0});
  Batch p = make_batch({{10.0}, {10.0}});
  Batch q = make_batch({{-10.0}, {-10.0}});
  double v = gan_penalty(q, p, disc, GanMode::TrainT);
  CHECK(std::abs(v) <= 1e-6);
  CHECK(std::isfinite(v));
}

TEST_CASE("gan_penalty: discriminator trained on identical distributions") {
  Rng rng(3);
  MlpNet disc({2, 16, 1}, {Activation::Tanh, Activation::Linear}, rng);
  auto opt = Optimizer::adam({.lr = 1e-2});
  Batch p = sample_prior(256, 2, rng);
  Batch q = p;  // identical distributions, identical batches
  for (int step = 0; step < 300; ++step) {
    Tape t;
    auto vars = disc.make_param_vars(t);
    Var loss = build_gan_train_loss(t, disc, vars, q, p);
    t.backward(loss);
    opt.step(disc.params().data(), read_grads(t, vars));
  }
  double v = gan_penalty(q, p, disc, GanMode::EvalPenalty);
  CHECK(std::abs(v - (-std::log(4.0))) <= 0.15);
}

TEST_CASE("pot_objective: perfect autoencoder at lambda 0") {
  EncoderSpec enc = DeterministicEncoder{identity_net(1)};
  DecoderSpec dec{identity_net(1), 0.0};
  Batch x = make_batch({{0.3}, {-1.7}, {2.0}});
  Rng rng(0);
  Batch zp = sample_prior(3, 1, rng);
  auto v = pot_objective(x, enc, dec, MomentMatchPenalty{}, 0.0, zp, SqEuclidean{}, rng);
  CHECK(v.recon == 0.0);
  CHECK(v.total == 0.0);
}

TEST_CASE("pot_objective: constant offset decoder gives recon 1") {
  EncoderSpec enc = DeterministicEncoder{identity_net(1)};
  DecoderSpec dec{linear_net(1, 1, {1.0}, {1.0}), 0.0};  // G(z) = z + 1
  Batch x = make_batch({{0.0}, {2.0}});
  Rng rng(0);
  Batch zp = sample_prior(2, 1, rng);
  auto v = pot_objective(x, enc, dec, MomentMatchPenalty{}, 0.0, zp, SqEuclidean{}, rng);
  CHECK(v.recon == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pot_objective: moment penalty vanishes when batches coincide") {
  EncoderSpec enc = DeterministicEncoder{identity_net(2)};
  DecoderSpec dec{identity_net(2), 0.0};
  Rng rng(5);
  Batch x = sample_prior(32, 2, rng);
  Batch zp = x;  // encoded batch equals the prior batch
  auto v = pot_objective(x, enc, dec, MomentMatchPenalty{}, 1.0, zp, SqEuclidean{}, rng);
  CHECK(std::abs(v.penalty) <= 1e-12);
  CHECK(v.total == doctest::Approx(v.recon).epsilon(1e-12));
}

TEST_CASE("pot_objective: lambda 0 equals the plain autoencoder loss") {
  Rng rng(9);
  MlpNet enc_net({2, 8, 2}, {Activation::Tanh, Activation::Linear}, rng);
  MlpNet dec_net({2, 8, 2}, {Activation::Tanh, Activation::Linear}, rng);
  EncoderSpec enc = DeterministicEncoder{enc_net};
  DecoderSpec dec{dec_net, 0.0};
  Batch x = sample_prior(16, 2, rng);
  Batch zp = sample_prior(16, 2, rng);
  Rng r2 = rng;
  auto v = pot_objective(x, enc, dec, MomentMatchPenalty{}, 0.0, zp, SqEuclidean{}, r2);

  double manual = 0.0;
  for (std::size_t i = 0; i < x.n; ++i) {
    auto z = enc_net.eval(x.row(i));
    auto y = dec_net.eval(z);
    double s = 0.0;
    for (std::size_t c = 0; c < x.dim; ++c) {
      double d_ = x.row(i)[c] - y[c];
      s += d_ * d_;
    }
    manual += s;
  }
  manual /= double(x.n);
  CHECK(v.recon == doctest::Approx(manual).epsilon(1e-12));
  CHECK(v.total == v.recon);
}

TEST_CASE("pot_objective: negative lambda rejected, empty batch rejected") {
  EncoderSpec enc = DeterministicEncoder{identity_net(1)};
  DecoderSpec dec{identity_net(1), 0.0};
  Rng rng(0);
  Batch zp = sample_prior(2, 1, rng);
  Batch x = make_batch({{0.0}});
  CHECK_THROWS_AS(
      pot_objective(x, enc, dec, MomentMatchPenalty{}, -1.0, zp, SqEuclidean{}, rng),
      std::invalid_argument);
  Batch empty;
  CHECK_THROWS_AS(
      pot_objective(empty, enc, dec, MomentMatchPenalty{}, 1.0, zp, SqEuclidean{}, rng),
      std::invalid_argument);
}

TEST_CASE("vae_objective: prior-matching posterior has zero KL") {
  // Zero-weight encoder: mu = 0, log sigma = 0.
  GaussianDiagEncoder enc{zero_net(2, 4)};
  DecoderSpec dec{identity_net(2), 0.5};
  Rng rng(2);
  Batch x = sample_prior(8, 2, rng);
  auto v = vae_objective(x, enc, dec, rng);
  CHECK(std::abs(v.penalty) <= 1e-12);
}

TEST_CASE("vae_objective: closed-form KL of a unit-mean posterior") {
  // mu = (1, 0), sigma = (1, 1): KL = 0.5 * mu^2 = 0.5.
  GaussianDiagEncoder enc{linear_net(2, 4, std::vector<double>(8, 0.0),
                                     {1.0, 0.0, 0.0, 0.0})};
  DecoderSpec dec{identity_net(2), 0.5};
  Rng rng(4);
  Batch x = sample_prior(4, 2, rng);
  auto v = vae_objective(x, enc, dec, rng);
  CHECK(v.penalty == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("vae_objective: exact reconstruction leaves the density constant") {
  // Near-deterministic encoder (log sigma at the -10 clamp) with identity
  // decoder: recon term -> (d/2) log(2 pi sigma^2) = log(pi) for d=2,
  // sigma^2 = 0.5.
  std::vector<double> w(2 * 4, 0.0);
  w[0 * 2 + 0] = 1.0;
  w[1 * 2 + 1] = 1.0;  // mu = x
  GaussianDiagEncoder enc{explicit_net(
      {2, 4}, {Activation::Linear},
      [&] {
        std::vector<double> p = w;
        p.insert(p.end(), {0.0, 0.0, -30.0, -30.0});  // log sigma clamps to -10
        return p;
      }())};
  DecoderSpec dec{identity_net(2), 0.5};
  Rng rng(6);
  Batch x = sample_prior(8, 2, rng);
  auto v = vae_objective(x, enc, dec, rng);
  CHECK(v.recon == doctest::Approx(std::log(std::numbers::pi)).epsilon(1e-4));
}

TEST_CASE("vae_objective: sigma2 = 0 rejected") {
  GaussianDiagEncoder enc{zero_net(2, 4)};
  DecoderSpec dec{identity_net(2), 0.0};
  Rng rng(0);
  Batch x = sample_prior(4, 2, rng);
  CHECK_THROWS_AS(vae_objective(x, enc, dec, rng), std::invalid_argument);
}

TEST_CASE("aae_objective: perfect reconstruction with constant discriminator") {
  EncoderSpec enc = DeterministicEncoder{identity_net(2)};
  double sigma2 = 0.7;
  DecoderSpec dec{identity_net(2), sigma2};
  MlpNet disc = zero_net(2, 1);
  Rng rng(8);
  Batch x = sample_prior(8, 2, rng);
  Batch zp = sample_prior(8, 2, rng);
  auto v = aae_objective(x, enc, dec, disc, zp, rng);
  double expect =
      -std::log(4.0) + std::log(2.0 * std::numbers::pi * sigma2);  // (d/2) = 1
  CHECK(v.total == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("aae_objective: batch of one is fine; sigma2 = 0 is not") {
  EncoderSpec enc = DeterministicEncoder{identity_net(1)};
  MlpNet disc = zero_net(1, 1);
  Rng rng(10);
  Batch x = make_batch({{0.25}});
  Batch zp = sample_prior(1, 1, rng);
  auto v = aae_objective(x, enc, DecoderSpec{identity_net(1), 0.3}, disc, zp, rng);
  CHECK(std::isfinite(v.total));
  CHECK_THROWS_AS(aae_objective(x, enc, DecoderSpec{identity_net(1), 0.0}, disc, zp, rng),
                  std::invalid_argument);
}

TEST_CASE("aae/pot equivalence at lambda = 2 sigma^2") {
  for (auto [seed, sigma2, n] : {std::tuple<std::uint64_t, double, std::size_t>{2, 0.5, 32},
                                 {3, 1.0, 8},
                                 {4, 0.01, 16},
                                 {5, 2.0, 24}}) {
    Rng rng(seed);
    MlpNet enc_net({2, 8, 2}, {Activation::Tanh, Activation::Linear}, rng);
    MlpNet dec_net({2, 8, 2}, {Activation::Tanh, Activation::Linear}, rng);
    MlpNet disc({2, 8, 1}, {Activation::Tanh, Activation::Linear}, rng);
    EncoderSpec enc = DeterministicEncoder{enc_net};
    DecoderSpec dec{dec_net, sigma2};
    Batch x = sample_prior(n, 2, rng);
    Batch zp = sample_prior(n, 2, rng);
    double disc_val = aae_pot_equivalence_check(x, enc, dec, disc, zp, sigma2, rng);
    CHECK(disc_val <= 1e-9);
  }
}

TEST_CASE("aae/pot equivalence: only constants remain at zero reconstruction") {
  EncoderSpec enc = DeterministicEncoder{identity_net(2)};
  DecoderSpec dec{identity_net(2), 1.0};
  MlpNet disc = zero_net(2, 1);
  Rng rng(12);
  Batch x = sample_prior(8, 2, rng);
  Batch zp = sample_prior(8, 2, rng);
  CHECK(aae_pot_equivalence_check(x, enc, dec, disc, zp, 1.0, rng) <= 1e-12);
}

TEST_CASE("aae/pot equivalence with a stochastic encoder shares the draws") {
  Rng rng(14);
  MlpNet enc_net({2, 8, 4}, {Activation::Tanh, Activation::Linear}, rng);
  MlpNet dec_net({2, 8, 2}, {Activation::Tanh, Activation::Linear}, rng);
  MlpNet disc({2, 8, 1}, {Activation::Tanh, Activation::Linear}, rng);
  EncoderSpec enc = GaussianDiagEncoder{enc_net};
  DecoderSpec dec{dec_net, 0.25};
  Batch x = sample_prior(16, 2, rng);
  Batch zp = sample_prior(16, 2, rng);
  CHECK(aae_pot_equivalence_check(x, enc, dec, disc, zp, 0.25, rng) <= 1e-9);
}

TEST_CASE("wgan_objectives: hand values") {
  // Constant critic: both losses collapse to the constant.
  MlpNet const_critic = linear_net(1, 1, {0.0}, {3.0});
  DecoderSpec gen{zero_net(1, 1), 0.0};
  Batch x = make_batch({{1.0}, {3.0}});
  Batch z = make_batch({{0.5}, {-0.5}});
  auto v = wgan_objectives(x, z, gen, const_critic);
  CHECK(v.critic_loss == doctest::Approx(0.0).epsilon(1e-12));

  // Identity critic, data mean 2, generator stuck at 0: objective 2.
  MlpNet id_critic = linear_net(1, 1, {1.0}, {0.0});
  auto v2 = wgan_objectives(x, z, gen, id_critic);
  CHECK(v2.critic_loss == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(v2.gen_loss == doctest::Approx(0.0).epsilon(1e-12));

  // Identical batches: any critic scores zero.
  DecoderSpec id_gen{identity_net(1), 0.0};
  Rng rng(1);
  MlpNet critic({1, 8, 1}, {Activation::Tanh, Activation::Linear}, rng);
  auto v3 = wgan_objectives(x, x, id_gen, critic);
  CHECK(v3.critic_loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("objective components stay finite under extreme discriminators") {
  MlpNet disc = linear_net(2, 1, {1e6, 1e6}, {0.0});
  Rng rng(16);
  Batch q = sample_prior(8, 2, rng), p = sample_prior(8, 2, rng);
  double v = gan_penalty(q, p, disc, GanMode::EvalPenalty);
  CHECK(std::isfinite(v));
}
