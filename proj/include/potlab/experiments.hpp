#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "potlab/matrix.hpp"
#include "potlab/measures.hpp"
#include "potlab/rng.hpp"

namespace potlab {

// Exact 1D squared 2-Wasserstein between equal-size uniform samples via the
// sorted (quantile) coupling; O(n log n) and cross-checked against the LP
// solver in the tests.
double w2sq_sorted_1d(std::vector<double> a, std::vector<double> b);

// Gaussian minimizer study: P_X = P_Z = N(0,1), decoders G(z) = c z, noise
// variance sigma2 in (0,1). Scans the c-grid for the minimizers of the
// upper-bound objective (c_dagger, analytically at 1) and of the true
// transport cost of the noisy model (c_star, analytically at sqrt(1-sigma2)).
struct Prop1Result {
  double sigma2 = 0.0;
  double c_dagger = 0.0;
  double c_star = 0.0;
  std::vector<double> grid;
  std::vector<double> w_dagger_curve;
  std::vector<double> w_c_curve;
};

Prop1Result prop1_gaussian(double sigma2, double c_min, double c_max, double c_step,
                           std::size_t n_mc, Rng rng);

// Optimal squared-loss decoder table G*(z) = E[X | Z = z] under a fixed
// conditional Q(Z|X): a posterior-weighted mean over the data atoms. A latent
// atom is flagged blurry when two or more atoms contribute more than 1% of
// its posterior mass. Throws if some latent atom receives zero mass.
struct BlurrinessResult {
  Matrix decoder_table;      // K x d
  std::vector<bool> blurry;  // per latent atom
  Matrix posterior;          // K x n, rows sum to 1
};

BlurrinessResult blurriness_demo(const DiscreteMeasure& x_atoms, const Matrix& q);

// Dual-gradient fragility on a two-point geometry: an exact 1-Lipschitz
// witness for W_1 (McShane extension of the LP potentials) against an
// epsilon-suboptimal local modification whose gradient at y0 points
// elsewhere. bump_center overrides the default placement (2*epsilon off the
// witness-gradient axis through y0).
struct FragilityGeometry {
  std::array<double, 2> x0{}, x1{}, y0{}, y1{};
};

struct FragilityResult {
  double epsilon = 0.0;
  double suboptimality = 0.0;
  double cosine = 0.0;
  std::array<double, 2> grad_fstar{};
  std::array<double, 2> grad_feps{};
  double lipschitz_violation = 0.0;  // dense-grid pairwise check of f_eps
  double w1 = 0.0;
  std::string witness;
};

FragilityResult dual_fragility(const FragilityGeometry& geom, double epsilon,
                               std::optional<std::array<double, 2>> bump_center = {});

}  // namespace potlab
