#include "potlab/objectives.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace potlab {

namespace {

constexpr double kProbFloor = 1e-7;  // Eq.-3-style logs diverge at {0,1}
constexpr double kLogSigClamp = 10.0;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t fnv1a(std::uint64_t h, double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  for (int k = 0; k < 8; ++k) {
    h ^= (bits >> (8 * k)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<Var> as_leaves(Tape& t, std::span<const double> xs) {
  std::vector<Var> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(t.leaf(x));
  return out;
}

// z vars for one batch plus the closed-form KL mean for Gaussian encoders.
struct Encoded {
  std::vector<Var> z;  // n * dz
  Var kl_mean{};
  bool has_kl = false;
};

Encoded encode_on_tape(Tape& t, const EncoderSpec& enc, std::span<const Var> params,
                       const Batch& x, const EncodeNoise& noise) {
  Encoded out;
  const std::size_t n = x.n;
  const std::size_t dz = encoder_latent_dim(enc);
  out.z.reserve(n * dz);

  if (const auto* det = std::get_if<DeterministicEncoder>(&enc)) {
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = as_leaves(t, x.row(i));
      auto zi = det->net.forward(t, xi, params);
      out.z.insert(out.z.end(), zi.begin(), zi.end());
    }
  } else if (const auto* gau = std::get_if<GaussianDiagEncoder>(&enc)) {
    require(noise.eps.size() == n * dz, "encode: noise buffer size mismatch");
    std::vector<Var> kls;
    kls.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = as_leaves(t, x.row(i));
      auto h = gau->net.forward(t, xi, params);
      std::vector<Var> kl_terms;
      for (std::size_t k = 0; k < dz; ++k) {
        Var mu = h[k];
        Var logsig = t.clamp(h[dz + k], -kLogSigClamp, kLogSigClamp);
        Var sig = t.exp_fn(logsig);
        Var eps = t.constant(noise.eps[i * dz + k]);
        out.z.push_back(t.add(mu, t.mul(sig, eps)));
        // 1/2 (mu^2 + sigma^2 - log sigma^2 - 1)
        Var term = t.add(t.square(mu), t.square(sig));
        term = t.sub(term, t.mul_const(logsig, 2.0));
        kl_terms.push_back(t.mul_const(t.add_const(term, -1.0), 0.5));
      }
      kls.push_back(t.sum(kl_terms));
    }
    out.kl_mean = t.mean(kls);
    out.has_kl = true;
  } else if (const auto* imp = std::get_if<ImplicitEncoder>(&enc)) {
    require(noise.eps.size() == n * imp->noise_dim, "encode: noise buffer size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Var> in = as_leaves(t, x.row(i));
      for (std::size_t k = 0; k < imp->noise_dim; ++k)
        in.push_back(t.constant(noise.eps[i * imp->noise_dim + k]));
      auto zi = imp->net.forward(t, in, params);
      out.z.insert(out.z.end(), zi.begin(), zi.end());
    }
  }
  return out;
}

std::vector<Var> decode_on_tape(Tape& t, const DecoderSpec& dec,
                                std::span<const Var> params, std::span<const Var> z,
                                std::size_t n, std::size_t dz) {
  std::vector<Var> ys;
  ys.reserve(n * dec.net.out_dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto yi = dec.net.forward(t, z.subspan(i * dz, dz), params);
    ys.insert(ys.end(), yi.begin(), yi.end());
  }
  return ys;
}

// mean_i c(x_i, y_i) as a tape node.
Var transport_recon(Tape& t, const Batch& x, std::span<const Var> y, bool squared) {
  std::vector<Var> per_sample;
  per_sample.reserve(x.n);
  std::vector<Var> sq;
  for (std::size_t i = 0; i < x.n; ++i) {
    sq.clear();
    auto xi = x.row(i);
    for (std::size_t c = 0; c < x.dim; ++c)
      sq.push_back(t.square(t.add_const(t.neg(y[i * x.dim + c]), xi[c])));
    Var s = t.sum(sq);
    per_sample.push_back(squared ? s : t.sqrt_fn(s));
  }
  return t.mean(per_sample);
}

// mean_i [ ||x_i - y_i||^2 / (2 sigma^2) + (d/2) log(2 pi sigma^2) ]
Var gaussian_nll_recon(Tape& t, const Batch& x, std::span<const Var> y, double sigma2) {
  Var mse = transport_recon(t, x, y, /*squared=*/true);
  double konst = 0.5 * double(x.dim) * std::log(2.0 * std::numbers::pi * sigma2);
  return t.add_const(t.mul_const(mse, 1.0 / (2.0 * sigma2)), konst);
}

// Discriminator probability with sigmoid and [1e-7, 1-1e-7] clamp.
Var disc_prob(Tape& t, const MlpNet& disc, std::span<const Var> params,
              std::span<const Var> z) {
  auto raw = disc.forward(t, z, params);
  require(raw.size() == 1, "discriminator must have scalar output");
  return t.clamp(t.sigmoid(raw[0]), kProbFloor, 1.0 - kProbFloor);
}

double disc_prob_value(const MlpNet& disc, std::span<const double> z) {
  double raw = disc.eval(z)[0];
  double s = 1.0 / (1.0 + std::exp(-raw));
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, s));
}

// Non-saturating encoder surrogate: -mean log T(q) over tape latents.
Var nonsat_loss(Tape& t, const MlpNet& disc, std::span<const Var> z, std::size_t n,
                std::size_t dz) {
  auto frozen = disc.make_param_vars(t);
  std::vector<Var> logs;
  logs.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    logs.push_back(t.log_fn(disc_prob(t, disc, frozen, z.subspan(i * dz, dz))));
  return t.neg(t.mean(logs));
}

// ||mean(q)-mean(p)||^2 + ||cov(q)-cov(p)||_F^2 on the tape, against the
// prior batch's empirical moments (population normalization 1/n).
Var moment_match_loss(Tape& t, std::span<const Var> z, std::size_t n, std::size_t dz,
                      const Batch& p, double weight) {
  std::vector<double> pm(dz, 0.0);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t k = 0; k < dz; ++k) pm[k] += p.data[i * dz + k];
  for (double& v : pm) v /= double(p.n);
  Matrix pcov(dz, dz);
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t k = 0; k < dz; ++k)
      for (std::size_t l = 0; l < dz; ++l)
        pcov(k, l) += (p.data[i * dz + k] - pm[k]) * (p.data[i * dz + l] - pm[l]) / double(p.n);

  std::vector<Var> qm(dz);
  std::vector<Var> col;
  for (std::size_t k = 0; k < dz; ++k) {
    col.clear();
    for (std::size_t i = 0; i < n; ++i) col.push_back(z[i * dz + k]);
    qm[k] = t.mean(col);
  }
  std::vector<Var> terms;
  for (std::size_t k = 0; k < dz; ++k) terms.push_back(t.square(t.add_const(qm[k], -pm[k])));
  std::vector<Var> prods;
  for (std::size_t k = 0; k < dz; ++k)
    for (std::size_t l = 0; l < dz; ++l) {
      prods.clear();
      for (std::size_t i = 0; i < n; ++i)
        prods.push_back(t.mul(t.sub(z[i * dz + k], qm[k]), t.sub(z[i * dz + l], qm[l])));
      Var qcov = t.mean(prods);
      terms.push_back(t.square(t.add_const(qcov, -pcov(k, l))));
    }
  return t.mul_const(t.sum(terms), weight);
}

Batch latents_from_tape(const Tape& t, std::span<const Var> z, std::size_t n,
                        std::size_t dz) {
  Batch q(n, dz);
  for (std::size_t i = 0; i < n * dz; ++i) q.data[i] = t.value(z[i]);
  return q;
}

void check_batches(const Batch& x, const Batch& z_prior, std::size_t dz) {
  require(x.n >= 1, "objective: empty data batch");
  require(z_prior.n >= 1, "objective: empty prior batch");
  require(z_prior.dim == dz, "objective: prior dimension mismatch");
}

}  // namespace

Batch batch_from_measure(const DiscreteMeasure& m) {
  Batch b(m.size(), m.dim());
  b.data = m.flat_points();
  return b;
}

Batch sample_prior(std::size_t n, std::size_t dim, Rng& rng) {
  Batch b(n, dim);
  for (double& v : b.data) v = rng.normal();
  return b;
}

std::size_t encoder_latent_dim(const EncoderSpec& enc) {
  if (const auto* det = std::get_if<DeterministicEncoder>(&enc)) return det->net.out_dim();
  if (const auto* gau = std::get_if<GaussianDiagEncoder>(&enc)) {
    if (gau->net.out_dim() % 2 != 0)
      throw std::invalid_argument("gaussian encoder needs even output width (mu, log sigma)");
    return gau->net.out_dim() / 2;
  }
  return std::get<ImplicitEncoder>(enc).net.out_dim();
}

const MlpNet& encoder_net(const EncoderSpec& enc) {
  return std::visit([](const auto& e) -> const MlpNet& { return e.net; }, enc);
}
MlpNet& encoder_net(EncoderSpec& enc) {
  return std::visit([](auto& e) -> MlpNet& { return e.net; }, enc);
}

EncodeNoise draw_encode_noise(const EncoderSpec& enc, std::size_t n, Rng& rng) {
  EncodeNoise out;
  std::size_t count = 0;
  if (const auto* gau = std::get_if<GaussianDiagEncoder>(&enc))
    count = n * (gau->net.out_dim() / 2);
  else if (const auto* imp = std::get_if<ImplicitEncoder>(&enc))
    count = n * imp->noise_dim;
  out.eps.reserve(count);
  out.checksum = 0xcbf29ce484222325ull;
  for (std::size_t k = 0; k < count; ++k) {
    double e = rng.normal();
    out.eps.push_back(e);
    out.checksum = fnv1a(out.checksum, e);
  }
  return out;
}

Batch encode_values(const EncoderSpec& enc, const Batch& x, const EncodeNoise& noise) {
  Tape t;
  auto params = encoder_net(enc).make_param_vars(t);
  Encoded e = encode_on_tape(t, enc, params, x, noise);
  return latents_from_tape(t, e.z, x.n, encoder_latent_dim(enc));
}

double gan_penalty(const Batch& q, const Batch& p, const MlpNet& disc, GanMode) {
  require(q.n >= 1 && p.n >= 1, "gan_penalty: empty batch");
  require(q.dim == p.dim, "gan_penalty: latent dimension mismatch");
  require(disc.in_dim() == q.dim, "gan_penalty: discriminator width mismatch");
  double lp = 0.0, lq = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) lp += std::log(disc_prob_value(disc, p.row(i)));
  for (std::size_t i = 0; i < q.n; ++i)
    lq += std::log(1.0 - disc_prob_value(disc, q.row(i)));
  return lp / double(p.n) + lq / double(q.n);
}

TapeObjective build_pot(Tape& t, const Batch& x, const EncoderSpec& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const PenaltySpec& pen,
                        double lambda, const Batch& z_prior, const CostKind& cost,
                        const EncodeNoise& noise) {
  require(lambda >= 0.0, "pot_objective: lambda must be >= 0");
  require(!std::holds_alternative<CustomCost>(cost),
          "pot_objective: cost kind must be a metric kind");
  const std::size_t dz = encoder_latent_dim(enc);
  check_batches(x, z_prior, dz);

  Encoded e = encode_on_tape(t, enc, enc_params, x, noise);
  auto y = decode_on_tape(t, dec, dec_params, e.z, x.n, dz);
  Var recon = transport_recon(t, x, y, std::holds_alternative<SqEuclidean>(cost));

  TapeObjective out;
  out.eps_checksum = noise.checksum;
  out.value.recon = t.value(recon);

  if (const auto* adv = std::get_if<AdversarialPenalty>(&pen)) {
    Batch q = latents_from_tape(t, e.z, x.n, dz);
    out.value.penalty = gan_penalty(q, z_prior, adv->discriminator, GanMode::EvalPenalty);
    if (lambda > 0.0) {
      Var surrogate = nonsat_loss(t, adv->discriminator, e.z, x.n, dz);
      out.loss = t.add(recon, t.mul_const(surrogate, lambda));
    } else {
      out.loss = recon;
    }
  } else {
    const auto& mm = std::get<MomentMatchPenalty>(pen);
    Var penalty = moment_match_loss(t, e.z, x.n, dz, z_prior, mm.weight);
    out.value.penalty = t.value(penalty);
    out.loss = lambda > 0.0 ? t.add(recon, t.mul_const(penalty, lambda)) : recon;
  }
  out.value.total = out.value.recon + lambda * out.value.penalty;
  return out;
}

TapeObjective build_vae(Tape& t, const Batch& x, const GaussianDiagEncoder& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const EncodeNoise& noise) {
  require(dec.sigma2 > 0.0, "vae_objective: sigma^2 must be > 0 (deterministic decoders unsupported)");
  EncoderSpec spec = enc;  // cheap: nets are value types
  const std::size_t dz = encoder_latent_dim(spec);
  require(x.n >= 1, "objective: empty data batch");

  Encoded e = encode_on_tape(t, spec, enc_params, x, noise);
  auto y = decode_on_tape(t, dec, dec_params, e.z, x.n, dz);
  Var recon = gaussian_nll_recon(t, x, y, dec.sigma2);

  TapeObjective out;
  out.eps_checksum = noise.checksum;
  out.loss = t.add(e.kl_mean, recon);
  out.value.recon = t.value(recon);
  out.value.penalty = t.value(e.kl_mean);
  out.value.total = out.value.recon + out.value.penalty;
  out.value.extra["kl"] = out.value.penalty;
  return out;
}

TapeObjective build_aae(Tape& t, const Batch& x, const EncoderSpec& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const MlpNet& disc,
                        const Batch& z_prior, const EncodeNoise& noise) {
  require(dec.sigma2 > 0.0, "aae_objective: sigma^2 must be > 0");
  const std::size_t dz = encoder_latent_dim(enc);
  check_batches(x, z_prior, dz);

  Encoded e = encode_on_tape(t, enc, enc_params, x, noise);
  auto y = decode_on_tape(t, dec, dec_params, e.z, x.n, dz);
  Var recon = gaussian_nll_recon(t, x, y, dec.sigma2);

  TapeObjective out;
  out.eps_checksum = noise.checksum;
  Batch q = latents_from_tape(t, e.z, x.n, dz);
  out.value.penalty = gan_penalty(q, z_prior, disc, GanMode::EvalPenalty);
  out.value.recon = t.value(recon);
  out.value.total = out.value.penalty + out.value.recon;
  out.loss = t.add(recon, nonsat_loss(t, disc, e.z, x.n, dz));
  return out;
}

Var build_gan_train_loss(Tape& t, const MlpNet& disc, std::span<const Var> disc_params,
                         const Batch& q_detached, const Batch& p) {
  require(q_detached.n >= 1 && p.n >= 1, "gan train: empty batch");
  require(q_detached.dim == p.dim, "gan train: latent dimension mismatch");
  std::vector<Var> lp, lq;
  for (std::size_t i = 0; i < p.n; ++i) {
    auto zi = as_leaves(t, p.row(i));
    lp.push_back(t.log_fn(disc_prob(t, disc, disc_params, zi)));
  }
  for (std::size_t i = 0; i < q_detached.n; ++i) {
    auto zi = as_leaves(t, q_detached.row(i));
    Var prob = disc_prob(t, disc, disc_params, zi);
    lq.push_back(t.log_fn(t.add_const(t.neg(prob), 1.0)));
  }
  return t.neg(t.add(t.mean(lp), t.mean(lq)));
}

Var build_wgan_critic_loss(Tape& t, const MlpNet& critic,
                           std::span<const Var> critic_params, const Batch& x,
                           const Batch& gen_detached) {
  require(x.n >= 1 && gen_detached.n >= 1, "wgan critic: empty batch");
  std::vector<Var> tx, tg;
  for (std::size_t i = 0; i < x.n; ++i)
    tx.push_back(critic.forward(t, as_leaves(t, x.row(i)), critic_params)[0]);
  for (std::size_t i = 0; i < gen_detached.n; ++i)
    tg.push_back(critic.forward(t, as_leaves(t, gen_detached.row(i)), critic_params)[0]);
  return t.neg(t.sub(t.mean(tx), t.mean(tg)));
}

Var build_wgan_gen_loss(Tape& t, const DecoderSpec& dec, std::span<const Var> dec_params,
                        const MlpNet& critic, const Batch& z) {
  require(z.n >= 1, "wgan generator: empty batch");
  auto frozen = critic.make_param_vars(t);
  std::vector<Var> tg;
  for (std::size_t i = 0; i < z.n; ++i) {
    auto yi = dec.net.forward(t, as_leaves(t, z.row(i)), dec_params);
    tg.push_back(critic.forward(t, yi, frozen)[0]);
  }
  return t.neg(t.mean(tg));
}

ObjectiveValue pot_objective(const Batch& x, const EncoderSpec& enc,
                             const DecoderSpec& dec, const PenaltySpec& pen,
                             double lambda, const Batch& z_prior,
                             const CostKind& cost, Rng& rng) {
  Tape t;
  auto ep = encoder_net(enc).make_param_vars(t);
  auto dp = dec.net.make_param_vars(t);
  EncodeNoise noise = draw_encode_noise(enc, x.n, rng);
  return build_pot(t, x, enc, ep, dec, dp, pen, lambda, z_prior, cost, noise).value;
}

ObjectiveValue vae_objective(const Batch& x, const GaussianDiagEncoder& enc,
                             const DecoderSpec& dec, Rng& rng) {
  Tape t;
  auto ep = enc.net.make_param_vars(t);
  auto dp = dec.net.make_param_vars(t);
  EncoderSpec spec = enc;
  EncodeNoise noise = draw_encode_noise(spec, x.n, rng);
  return build_vae(t, x, enc, ep, dec, dp, noise).value;
}

ObjectiveValue aae_objective(const Batch& x, const EncoderSpec& enc,
                             const DecoderSpec& dec, const MlpNet& disc,
                             const Batch& z_prior, Rng& rng) {
  Tape t;
  auto ep = encoder_net(enc).make_param_vars(t);
  auto dp = dec.net.make_param_vars(t);
  EncodeNoise noise = draw_encode_noise(enc, x.n, rng);
  return build_aae(t, x, enc, ep, dec, dp, disc, z_prior, noise).value;
}

double aae_pot_equivalence_check(const Batch& x, const EncoderSpec& enc,
                                 const DecoderSpec& dec, const MlpNet& disc,
                                 const Batch& z_prior, double sigma2, Rng& rng) {
  require(sigma2 > 0.0, "aae_pot_equivalence_check: sigma^2 must be > 0");
  DecoderSpec dec_s = dec;
  dec_s.sigma2 = sigma2;

  // Two clones of the same stream; the checksums prove both evaluations
  // consumed identical reparametrization draws.
  Rng rng_pot = rng, rng_aae = rng;
  EncodeNoise noise_pot = draw_encode_noise(enc, x.n, rng_pot);
  EncodeNoise noise_aae = draw_encode_noise(enc, x.n, rng_aae);
  if (noise_pot.checksum != noise_aae.checksum)
    throw std::runtime_error("aae_pot_equivalence_check: rng streams diverged");

  Tape t1;
  auto ep1 = encoder_net(enc).make_param_vars(t1);
  auto dp1 = dec_s.net.make_param_vars(t1);
  PenaltySpec pen = AdversarialPenalty{disc, 1};
  double d_pot = build_pot(t1, x, enc, ep1, dec_s, dp1, pen, 2.0 * sigma2, z_prior,
                           SqEuclidean{}, noise_pot)
                     .value.total;

  Tape t2;
  auto ep2 = encoder_net(enc).make_param_vars(t2);
  auto dp2 = dec_s.net.make_param_vars(t2);
  double d_aae =
      build_aae(t2, x, enc, ep2, dec_s, dp2, disc, z_prior, noise_aae).value.total;

  rng = rng_pot;  // both clones consumed the same draws; advance the caller

  double kappa = 0.5 * double(x.dim) * std::log(2.0 * std::numbers::pi * sigma2);
  double lhs = d_pot;
  double rhs = 2.0 * sigma2 * (d_aae - kappa);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

WganLosses wgan_objectives(const Batch& x, const Batch& z, const DecoderSpec& gen,
                           const MlpNet& critic) {
  require(x.n >= 1 && z.n >= 1, "wgan_objectives: empty batch");
  require(critic.in_dim() == x.dim, "wgan_objectives: critic width mismatch");
  double tx = 0.0, tg = 0.0;
  for (std::size_t i = 0; i < x.n; ++i) tx += critic.eval(x.row(i))[0];
  for (std::size_t i = 0; i < z.n; ++i) {
    auto y = gen.net.eval(z.row(i));
    tg += critic.eval(y)[0];
  }
  tx /= double(x.n);
  tg /= double(z.n);
  return WganLosses{-(tx - tg), -tg};
}

}  // namespace potlab
