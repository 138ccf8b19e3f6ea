#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "potlab/rng.hpp"

namespace potlab {

// Finitely supported probability measure: n points in R^d plus simplex
// weights. Weights are renormalized to sum exactly to 1 on construction.
// Immutable after construction; safe to share across threads.
class DiscreteMeasure {
 public:
  // points: n*d row-major. Throws on empty support, negative weight,
  // non-finite data or length mismatch.
  DiscreteMeasure(std::vector<double> points, std::size_t dim,
                  std::vector<double> weights);

  static DiscreteMeasure from_points(const std::vector<std::vector<double>>& pts,
                                     std::vector<double> weights);

  // Dirac at a single point.
  static DiscreteMeasure dirac(std::vector<double> point);

  // Uniform weights over the given support.
  static DiscreteMeasure uniform(std::vector<double> points, std::size_t dim);

  std::size_t size() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim_, dim_};
  }
  const std::vector<double>& flat_points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  // Euclidean mean of the measure.
  std::vector<double> mean() const;

 private:
  std::vector<double> points_;  // n*d row-major
  std::size_t dim_ = 0;
  std::vector<double> weights_;
};

// Desk-scale stand-ins for a data distribution.
struct GaussianData {
  std::vector<double> mean;      // length d
  std::vector<double> var_diag;  // length d, entries >= 0
};

struct Ring8Data {
  double radius = 2.0;
  double stddev = 0.05;
};

struct SwissRoll2dData {
  double noise = 0.05;
};

struct TwoPointsData {
  double x0 = 0.0;
  double x1 = 1.0;
  double p = 0.5;  // probability of drawing x1
};

using ToyDataset = std::variant<GaussianData, Ring8Data, SwissRoll2dData, TwoPointsData>;

// Output dimension of samples from the dataset.
std::size_t toy_dim(const ToyDataset& kind);

// Centers of the ring8 mixture on the circle of the given radius.
std::vector<std::vector<double>> ring8_centers(double radius);

// Uniform-weight empirical measure of n i.i.d. draws; deterministic given the
// rng state. Throws if n == 0 or the dataset parameters are invalid.
DiscreteMeasure sample_toy(const ToyDataset& kind, std::size_t n, Rng& rng);

// Image measure under g: same weights, points g(z_i). Coincident images are
// kept as separate atoms so index correspondence with the source survives.
// Throws if g produces a non-finite value or an inconsistent dimension.
DiscreteMeasure pushforward(
    const DiscreteMeasure& mu,
    const std::function<std::vector<double>(std::span<const double>)>& g);

}  // namespace potlab
