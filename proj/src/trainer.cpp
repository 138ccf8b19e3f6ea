#include "potlab/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "potlab/serialize.hpp"

namespace potlab {

void validate_config(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
  if (cfg.latent_dim == 0) throw std::invalid_argument("config: latent_dim must be >= 1");
  if (cfg.n_eval == 0) throw std::invalid_argument("config: n_eval must be >= 1");
  if (cfg.eval_every == 0) throw std::invalid_argument("config: eval_every must be >= 1");
  if (cfg.disc_steps == 0) throw std::invalid_argument("config: disc_steps must be >= 1");
  if (std::holds_alternative<CustomCost>(cfg.cost))
    throw std::invalid_argument("config: training cost must be a metric kind");

  switch (cfg.objective) {
    case ObjectiveKind::Pot:
      if (cfg.lambda < 0.0) throw std::invalid_argument("config: pot needs lambda >= 0");
      if (cfg.encoder == EncoderKind::None)
        throw std::invalid_argument("config: pot needs an encoder");
      break;
    case ObjectiveKind::Vae:
      if (cfg.encoder != EncoderKind::GaussianDiag)
        throw std::invalid_argument("config: vae needs a gaussian_diag encoder");
      if (!(cfg.sigma2 > 0.0))
        throw std::invalid_argument("config: vae needs sigma2 > 0");
      break;
    case ObjectiveKind::Aae:
      if (!(cfg.sigma2 > 0.0))
        throw std::invalid_argument("config: aae needs sigma2 > 0");
      if (cfg.encoder == EncoderKind::None)
        throw std::invalid_argument("config: aae needs an encoder");
      if (cfg.penalty != PenaltyKind::Adversarial)
        throw std::invalid_argument("config: aae penalty is adversarial by definition");
      break;
    case ObjectiveKind::Wgan:
      if (cfg.encoder != EncoderKind::None)
        throw std::invalid_argument("config: wgan has no encoder");
      if (!(cfg.wgan_clip > 0.0))
        throw std::invalid_argument("config: wgan needs a positive clip bound");
      break;
  }
}

namespace {

std::vector<std::size_t> full_widths(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

std::vector<Activation> hidden_acts(std::size_t layers, Activation act) {
  std::vector<Activation> a(layers, act);
  a.back() = Activation::Linear;
  return a;
}

MlpNet make_net(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                Activation act, Rng& rng) {
  auto w = full_widths(in, hidden, out);
  return MlpNet(w, hidden_acts(w.size() - 1, act), rng);
}

Batch draw_data(const ToyDataset& data, std::size_t n, Rng& rng) {
  return batch_from_measure(sample_toy(data, n, rng));
}

Optimizer make_opt(const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::Sgd) return Optimizer::sgd(cfg.lr);
  return Optimizer::adam({cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
}

void clip_params(std::vector<double>& p, double bound) {
  for (double& v : p) v = std::clamp(v, -bound, bound);
}

struct RunState {
  std::optional<EncoderSpec> enc;
  DecoderSpec dec;
  std::optional<MlpNet> disc;
};

RunState build_models(const TrainConfig& cfg, Rng& rng) {
  RunState st;
  const std::size_t d = toy_dim(cfg.dataset);
  const std::size_t dz = cfg.latent_dim;
  switch (cfg.encoder) {
    case EncoderKind::Deterministic:
      st.enc = DeterministicEncoder{make_net(d, cfg.enc_hidden, dz, cfg.activation, rng)};
      break;
    case EncoderKind::GaussianDiag:
      st.enc =
          GaussianDiagEncoder{make_net(d, cfg.enc_hidden, 2 * dz, cfg.activation, rng)};
      break;
    case EncoderKind::Implicit:
      st.enc = ImplicitEncoder{
          make_net(d + cfg.noise_dim, cfg.enc_hidden, dz, cfg.activation, rng),
          cfg.noise_dim};
      break;
    case EncoderKind::None: break;
  }
  st.dec.net = make_net(dz, cfg.dec_hidden, d, cfg.activation, rng);
  st.dec.sigma2 = cfg.sigma2;

  bool needs_disc = cfg.objective == ObjectiveKind::Wgan ||
                    (cfg.objective == ObjectiveKind::Aae) ||
                    (cfg.objective == ObjectiveKind::Pot &&
                     cfg.penalty == PenaltyKind::Adversarial && cfg.lambda > 0.0);
  if (needs_disc) {
    std::size_t disc_in = cfg.objective == ObjectiveKind::Wgan ? d : dz;
    st.disc = make_net(disc_in, cfg.disc_hidden, 1, cfg.activation, rng);
  }
  return st;
}

}  // namespace

MetricsRow evaluate(const MlpNet& decoder, const ToyDataset& dataset,
                    const CostKind& cost, std::size_t n_eval, Rng& rng) {
  if (n_eval == 0) throw std::invalid_argument("evaluate: n_eval must be >= 1");
  const std::size_t dz = decoder.in_dim();

  // Noiseless generation: G(z) even when the training objective used a
  // Gaussian decoder (samples come from the implicit model).
  Batch z = sample_prior(n_eval, dz, rng);
  std::vector<double> gen;
  decoder.eval_batch(z.data, n_eval, gen);
  DiscreteMeasure model = DiscreteMeasure::uniform(std::move(gen), decoder.out_dim());
  DiscreteMeasure data = sample_toy(dataset, n_eval, rng);

  MetricsRow row;
  row.w_eval = solve_primal(data, model, cost).value;
  row.details["eval_noise_sigma2"] = 0.0;
  return row;
}

TrainOutput train(const TrainConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&t0] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Rng rng(cfg.seed);
  RunState st = build_models(cfg, rng);
  const std::size_t dz = cfg.latent_dim;

  Optimizer enc_opt = make_opt(cfg), dec_opt = make_opt(cfg), disc_opt = make_opt(cfg);
  std::size_t disc_updates = 0;

  TrainOutput out;

  auto snapshot_diag = [&](std::size_t step, const std::string& what) {
    if (out_dir.empty()) return;
    io::json diag{{"step", step}, {"error", what}, {"ms", elapsed_ms()}};
    io::atomic_write(out_dir + "/diagnostic.json", diag.dump(2) + "\n");
  };

  auto emit_row = [&](std::size_t step, double recon, double penalty, double total) {
    MetricsRow row = evaluate(st.dec.net, cfg.dataset, cfg.cost, cfg.n_eval, rng);
    row.step = step;
    row.recon = recon;
    row.penalty = penalty;
    row.total = total;
    row.ms = elapsed_ms();
    row.details["train_sigma2"] = cfg.sigma2;
    row.details["disc_updates"] = double(disc_updates);
    if (!std::isfinite(row.w_eval)) {
      snapshot_diag(step, "non-finite w_eval");
      throw std::runtime_error("train: non-finite w_eval at step " + std::to_string(step));
    }
    out.metrics.push_back(std::move(row));
  };

  auto save_ckpts = [&](std::size_t step) {
    if (out_dir.empty()) return;
    std::string base = out_dir + "/ckpt_" + std::to_string(step);
    io::save_checkpoint(st.dec.net, base + "_dec");
    if (st.enc) io::save_checkpoint(encoder_net(*st.enc), base + "_enc");
    if (st.disc) io::save_checkpoint(*st.disc, base + "_disc");
  };

  // Objective readout without an update, for the step-0 row and for the
  // final row's loss columns.
  auto objective_values = [&](const Batch& x, const Batch& zp, const EncodeNoise& noise) {
    double recon = 0.0, penalty = 0.0, total = 0.0;
    if (cfg.objective == ObjectiveKind::Wgan) {
      WganLosses losses = wgan_objectives(x, zp, st.dec, *st.disc);
      recon = losses.critic_loss;
      penalty = losses.gen_loss;
      total = losses.gen_loss;
      return std::array<double, 3>{recon, penalty, total};
    }
    Tape t;
    auto ep = encoder_net(*st.enc).make_param_vars(t);
    auto dp = st.dec.net.make_param_vars(t);
    ObjectiveValue v;
    switch (cfg.objective) {
      case ObjectiveKind::Pot: {
        PenaltySpec pen = MomentMatchPenalty{cfg.penalty_weight};
        if (cfg.penalty == PenaltyKind::Adversarial && st.disc)
          pen = AdversarialPenalty{*st.disc, cfg.disc_steps};
        v = build_pot(t, x, *st.enc, ep, st.dec, dp, pen, cfg.lambda, zp, cfg.cost, noise)
                .value;
        break;
      }
      case ObjectiveKind::Vae:
        v = build_vae(t, x, std::get<GaussianDiagEncoder>(*st.enc), ep, st.dec, dp, noise)
                .value;
        break;
      case ObjectiveKind::Aae:
        v = build_aae(t, x, *st.enc, ep, st.dec, dp, *st.disc, zp, noise).value;
        break;
      case ObjectiveKind::Wgan: break;
    }
    return std::array<double, 3>{v.recon, v.penalty, v.total};
  };

  {
    Batch x = draw_data(cfg.dataset, cfg.batch_size, rng);
    Batch zp = sample_prior(cfg.batch_size, dz, rng);
    EncodeNoise noise;
    if (st.enc) noise = draw_encode_noise(*st.enc, cfg.batch_size, rng);
    auto vals = objective_values(x, zp, noise);
    emit_row(0, vals[0], vals[1], vals[2]);
  }

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    Batch x = draw_data(cfg.dataset, cfg.batch_size, rng);
    Batch zp = sample_prior(cfg.batch_size, dz, rng);
    EncodeNoise noise;
    if (st.enc) noise = draw_encode_noise(*st.enc, cfg.batch_size, rng);

    double recon = 0.0, penalty = 0.0, total = 0.0;

    try {
      if (cfg.objective == ObjectiveKind::Wgan) {
        // Critic ascent with weight clipping after each step.
        std::vector<double> gen;
        st.dec.net.eval_batch(zp.data, cfg.batch_size, gen);
        Batch gen_batch(cfg.batch_size, toy_dim(cfg.dataset));
        gen_batch.data = gen;
        for (std::size_t k = 0; k < cfg.disc_steps; ++k) {
          Tape t;
          auto tp = st.disc->make_param_vars(t);
          Var loss = build_wgan_critic_loss(t, *st.disc, tp, x, gen_batch);
          t.backward(loss);
          disc_opt.step(st.disc->params().data(), read_grads(t, tp));
          clip_params(st.disc->params().data(), cfg.wgan_clip);
          ++disc_updates;
        }
        WganLosses losses = wgan_objectives(x, zp, st.dec, *st.disc);
        Tape t;
        auto dp = st.dec.net.make_param_vars(t);
        Var loss = build_wgan_gen_loss(t, st.dec, dp, *st.disc, zp);
        total = t.value(loss);
        recon = losses.critic_loss;
        penalty = losses.gen_loss;
        if (!std::isfinite(total)) throw std::runtime_error("non-finite wgan loss");
        t.backward(loss);
        dec_opt.step(st.dec.net.params().data(), read_grads(t, dp));
      } else {
        bool adversarial =
            st.disc.has_value() && (cfg.objective != ObjectiveKind::Vae);
        if (adversarial) {
          Batch q = encode_values(*st.enc, x, noise);
          for (std::size_t k = 0; k < cfg.disc_steps; ++k) {
            Tape t;
            auto tp = st.disc->make_param_vars(t);
            Var loss = build_gan_train_loss(t, *st.disc, tp, q, zp);
            t.backward(loss);
            disc_opt.step(st.disc->params().data(), read_grads(t, tp));
            ++disc_updates;
          }
        }

        Tape t;
        auto ep = encoder_net(*st.enc).make_param_vars(t);
        auto dp = st.dec.net.make_param_vars(t);
        TapeObjective obj;
        switch (cfg.objective) {
          case ObjectiveKind::Pot: {
            // lambda = 0 builds no discriminator at all; fall back to the
            // (unused) moment penalty so the build stays total.
            PenaltySpec pen = MomentMatchPenalty{cfg.penalty_weight};
            if (cfg.penalty == PenaltyKind::Adversarial && st.disc)
              pen = AdversarialPenalty{*st.disc, cfg.disc_steps};
            obj = build_pot(t, x, *st.enc, ep, st.dec, dp, pen, cfg.lambda, zp,
                            cfg.cost, noise);
            break;
          }
          case ObjectiveKind::Vae:
            obj = build_vae(t, x, std::get<GaussianDiagEncoder>(*st.enc), ep, st.dec,
                            dp, noise);
            break;
          case ObjectiveKind::Aae:
            obj = build_aae(t, x, *st.enc, ep, st.dec, dp, *st.disc, zp, noise);
            break;
          case ObjectiveKind::Wgan: break;
        }
        recon = obj.value.recon;
        penalty = obj.value.penalty;
        total = obj.value.total;
        if (!std::isfinite(t.value(obj.loss)) || !std::isfinite(total))
          throw std::runtime_error("non-finite training loss");
        t.backward(obj.loss);
        enc_opt.step(encoder_net(*st.enc).params().data(), read_grads(t, ep));
        dec_opt.step(st.dec.net.params().data(), read_grads(t, dp));
      }
    } catch (const std::runtime_error& e) {
      snapshot_diag(step, e.what());
      throw std::runtime_error("train: aborted at step " + std::to_string(step) + ": " +
                               e.what());
    }

    if (step % cfg.eval_every == 0 || step == cfg.steps)
      emit_row(step, recon, penalty, total);
    if (step % (cfg.eval_every * 10) == 0) save_ckpts(step);
  }

  save_ckpts(cfg.steps);
  if (!out_dir.empty()) {
    io::write_metrics_csv(out.metrics, out_dir + "/metrics.csv");
    io::atomic_write(out_dir + "/config.echo.json",
                     io::config_to_json(cfg).dump(2) + "\n");
  }

  out.encoder = std::move(st.enc);
  out.decoder = std::move(st.dec);
  out.discriminator = std::move(st.disc);
  out.disc_update_count = disc_updates;
  return out;
}

}  // namespace potlab
