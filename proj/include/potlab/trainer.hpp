#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potlab/exact_ot.hpp"
#include "potlab/measures.hpp"
#include "potlab/nn.hpp"
#include "potlab/objectives.hpp"

namespace potlab {

enum class ObjectiveKind { Pot, Aae, Vae, Wgan };
enum class EncoderKind { Deterministic, GaussianDiag, Implicit, None };
enum class PenaltyKind { Adversarial, MomentMatch };
enum class OptimizerKind { Sgd, Adam };

// Full description of one experiment. Consistency rules are enforced by
// validate_config: vae needs a gaussian encoder and sigma^2 > 0, aae needs
// sigma^2 > 0 and an adversarial penalty, wgan has no encoder, pot needs
// lambda >= 0.
struct TrainConfig {
  ObjectiveKind objective = ObjectiveKind::Pot;
  ToyDataset dataset = Ring8Data{};
  std::size_t latent_dim = 2;
  CostKind cost = SqEuclidean{};
  double lambda = 1.0;
  double sigma2 = 0.0;
  EncoderKind encoder = EncoderKind::Deterministic;
  std::size_t noise_dim = 2;  // implicit encoders only
  std::vector<std::size_t> enc_hidden = {32, 32};
  std::vector<std::size_t> dec_hidden = {32, 32};
  std::vector<std::size_t> disc_hidden = {32, 32};
  Activation activation = Activation::Tanh;
  PenaltyKind penalty = PenaltyKind::MomentMatch;
  double penalty_weight = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr = 1e-3;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t steps = 20000;
  std::size_t disc_steps = 1;  // discriminator updates per trainer step
  std::size_t eval_every = 500;
  std::size_t n_eval = 512;
  std::uint64_t seed = 0;
  double wgan_clip = 0.01;
};

void validate_config(const TrainConfig& cfg);

// One logged evaluation. w_eval is the exact OT distance (in the configured
// cost) between fresh noiseless model samples G(Z) and fresh data samples.
// ms is wall time since the start of the run and is the one column excluded
// from the bitwise reproducibility contract.
struct MetricsRow {
  std::size_t step = 0;
  double recon = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  double w_eval = 0.0;
  double ms = 0.0;
  std::map<std::string, double> details;
};

struct TrainOutput {
  std::vector<MetricsRow> metrics;
  std::optional<EncoderSpec> encoder;
  DecoderSpec decoder;
  std::optional<MlpNet> discriminator;
  std::size_t disc_update_count = 0;
};

// Alternating loop: per step draw a data batch and a prior batch, take k
// discriminator ascent steps (adversarial penalties and wgan critics only,
// with weight clipping for the latter), then one encoder-decoder descent
// step. Emits a metrics row at step 0, every eval_every steps and at the
// final step; checkpoints every 10*eval_every steps plus a final one when
// out_dir is nonempty. Deterministic given the config. A non-finite loss
// aborts with a diagnostic snapshot (std::runtime_error after writing
// diagnostic.json to out_dir).
TrainOutput train(const TrainConfig& cfg, const std::string& out_dir = "");

// Exact-OT validation of a decoder checkpoint: n_eval noiseless samples
// G(Z), Z ~ N(0, I), against n_eval fresh data samples.
MetricsRow evaluate(const MlpNet& decoder, const ToyDataset& dataset,
                    const CostKind& cost, std::size_t n_eval, Rng& rng);

}  // namespace potlab
