#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "potlab/autodiff.hpp"
#include "potlab/exact_ot.hpp"
#include "potlab/measures.hpp"
#include "potlab/nn.hpp"
#include "potlab/rng.hpp"

namespace potlab {

// Row-major batch of n vectors in R^dim.
struct Batch {
  std::size_t n = 0, dim = 0;
  std::vector<double> data;

  Batch() = default;
  Batch(std::size_t n_, std::size_t dim_) : n(n_), dim(dim_), data(n_ * dim_, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

Batch batch_from_measure(const DiscreteMeasure& m);

// n i.i.d. draws from the standard normal prior on R^dim.
Batch sample_prior(std::size_t n, std::size_t dim, Rng& rng);

// --- encoder / decoder / penalty specifications -------------------------

struct DeterministicEncoder {
  MlpNet net;  // X -> Z
};
struct GaussianDiagEncoder {
  MlpNet net;  // X -> (mu, log sigma), output width 2*dz; log sigma clamped to [-10, 10]
};
struct ImplicitEncoder {
  MlpNet net;  // (X, eps) -> Z
  std::size_t noise_dim = 1;
};
using EncoderSpec = std::variant<DeterministicEncoder, GaussianDiagEncoder, ImplicitEncoder>;

std::size_t encoder_latent_dim(const EncoderSpec& enc);
const MlpNet& encoder_net(const EncoderSpec& enc);
MlpNet& encoder_net(EncoderSpec& enc);

struct DecoderSpec {
  MlpNet net;           // Z -> X
  double sigma2 = 0.0;  // output variance; 0 means a Dirac decoder
};

struct AdversarialPenalty {
  MlpNet discriminator;         // Z -> R; sigmoid applied by the penalty
  std::size_t inner_steps = 1;  // discriminator updates per trainer step
};
struct MomentMatchPenalty {
  double weight = 1.0;
};
using PenaltySpec = std::variant<AdversarialPenalty, MomentMatchPenalty>;

struct ObjectiveValue {
  double total = 0.0;
  double recon = 0.0;
  double penalty = 0.0;
  std::map<std::string, double> extra;
};

// --- reparametrization noise --------------------------------------------

// Noise drawn once per (sample, step); gradients flow through mu/log sigma,
// never through eps. The checksum fingerprints the drawn stream so paired
// evaluations can prove they consumed identical draws.
struct EncodeNoise {
  std::vector<double> eps;
  std::uint64_t checksum = 0;
};

EncodeNoise draw_encode_noise(const EncoderSpec& enc, std::size_t n, Rng& rng);

// Deterministic value-path encoding (used where gradients are not needed,
// e.g. the discriminator's view of the aggregated posterior).
Batch encode_values(const EncoderSpec& enc, const Batch& x, const EncodeNoise& noise);

// --- tape builders (trainer-facing) --------------------------------------

// Reported numbers plus the loss node the encoder-decoder step descends.
struct TapeObjective {
  ObjectiveValue value;
  Var loss;
  std::uint64_t eps_checksum = 0;
};

TapeObjective build_pot(Tape& t, const Batch& x, const EncoderSpec& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const PenaltySpec& pen,
                        double lambda, const Batch& z_prior, const CostKind& cost,
                        const EncodeNoise& noise);

TapeObjective build_vae(Tape& t, const Batch& x, const GaussianDiagEncoder& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const EncodeNoise& noise);

TapeObjective build_aae(Tape& t, const Batch& x, const EncoderSpec& enc,
                        std::span<const Var> enc_params, const DecoderSpec& dec,
                        std::span<const Var> dec_params, const MlpNet& disc,
                        const Batch& z_prior, const EncodeNoise& noise);

// Descending this ascends the discrimination value of the frozen batches.
Var build_gan_train_loss(Tape& t, const MlpNet& disc, std::span<const Var> disc_params,
                         const Batch& q_detached, const Batch& p);

Var build_wgan_critic_loss(Tape& t, const MlpNet& critic,
                           std::span<const Var> critic_params, const Batch& x,
                           const Batch& gen_detached);

Var build_wgan_gen_loss(Tape& t, const DecoderSpec& dec, std::span<const Var> dec_params,
                        const MlpNet& critic, const Batch& z);

// --- value-level objectives ----------------------------------------------

enum class GanMode { TrainT, EvalPenalty };

// Discrimination value E_p[log T] + E_q[log(1 - T)] with p in the "real"
// slot; T's raw output goes through a sigmoid and a [1e-7, 1-1e-7] clamp.
// TrainT marks the value that the discriminator ascends; EvalPenalty marks
// the value reported as the penalty of the current encoder (whose gradient
// path uses the non-saturating surrogate instead).
double gan_penalty(const Batch& q, const Batch& p, const MlpNet& disc, GanMode mode);

ObjectiveValue pot_objective(const Batch& x, const EncoderSpec& enc,
                             const DecoderSpec& dec, const PenaltySpec& pen,
                             double lambda, const Batch& z_prior,
                             const CostKind& cost, Rng& rng);

ObjectiveValue vae_objective(const Batch& x, const GaussianDiagEncoder& enc,
                             const DecoderSpec& dec, Rng& rng);

ObjectiveValue aae_objective(const Batch& x, const EncoderSpec& enc,
                             const DecoderSpec& dec, const MlpNet& disc,
                             const Batch& z_prior, Rng& rng);

// |D_POT - 2 sigma^2 (D_AAE - kappa)| / max(1, |D_POT|) with lambda = 2 sigma^2,
// kappa = (d/2) log(2 pi sigma^2), both sides fed the identical noise stream
// (verified by checksum; mismatch throws).
double aae_pot_equivalence_check(const Batch& x, const EncoderSpec& enc,
                                 const DecoderSpec& dec, const MlpNet& disc,
                                 const Batch& z_prior, double sigma2, Rng& rng);

struct WganLosses {
  double critic_loss = 0.0;  // -(mean T(x) - mean T(G(z)))
  double gen_loss = 0.0;     // -mean T(G(z))
};

WganLosses wgan_objectives(const Batch& x, const Batch& z, const DecoderSpec& gen,
                           const MlpNet& critic);

}  // namespace potlab
