#include "potlab/measures.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace potlab {

DiscreteMeasure::DiscreteMeasure(std::vector<double> points, std::size_t dim,
                                 std::vector<double> weights)
    : points_(std::move(points)), dim_(dim), weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("DiscreteMeasure: empty support");
  if (dim_ == 0) throw std::invalid_argument("DiscreteMeasure: dimension must be >= 1");
  if (points_.size() != weights_.size() * dim_)
    throw std::invalid_argument("DiscreteMeasure: points/weights length mismatch");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("DiscreteMeasure: negative weight");
    sum += w;
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw std::invalid_argument("DiscreteMeasure: weights must have positive finite sum");
  for (double x : points_)
    if (!std::isfinite(x)) throw std::invalid_argument("DiscreteMeasure: non-finite point");
  for (double& w : weights_) w /= sum;
}

DiscreteMeasure DiscreteMeasure::from_points(
    const std::vector<std::vector<double>>& pts, std::vector<double> weights) {
  if (pts.empty()) throw std::invalid_argument("DiscreteMeasure: empty support");
  std::size_t d = pts.front().size();
  std::vector<double> flat;
  flat.reserve(pts.size() * d);
  for (const auto& p : pts) {
    if (p.size() != d) throw std::invalid_argument("DiscreteMeasure: dimension mismatch");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return DiscreteMeasure(std::move(flat), d, std::move(weights));
}

DiscreteMeasure DiscreteMeasure::dirac(std::vector<double> point) {
  std::size_t d = point.size();
  return DiscreteMeasure(std::move(point), d, {1.0});
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<double> points, std::size_t dim) {
  if (dim == 0 || points.size() % dim != 0)
    throw std::invalid_argument("DiscreteMeasure::uniform: bad dimensions");
  std::size_t n = points.size() / dim;
  return DiscreteMeasure(std::move(points), dim, std::vector<double>(n, 1.0));
}

std::vector<double> DiscreteMeasure::mean() const {
  std::vector<double> m(dim_, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    auto p = point(i);
    for (std::size_t k = 0; k < dim_; ++k) m[k] += weights_[i] * p[k];
  }
  return m;
}

std::size_t toy_dim(const ToyDataset& kind) {
  return std::visit(
      [](const auto& k) -> std::size_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianData>) return k.mean.size();
        if constexpr (std::is_same_v<T, Ring8Data>) return 2;
        if constexpr (std::is_same_v<T, SwissRoll2dData>) return 2;
        if constexpr (std::is_same_v<T, TwoPointsData>) return 1;
      },
      kind);
}

std::vector<std::vector<double>> ring8_centers(double radius) {
  std::vector<std::vector<double>> centers;
  for (int k = 0; k < 8; ++k) {
    double a = 2.0 * std::numbers::pi * k / 8.0;
    centers.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return centers;
}

namespace {

void validate(const ToyDataset& kind) {
  if (const auto* g = std::get_if<GaussianData>(&kind)) {
    if (g->mean.empty() || g->mean.size() != g->var_diag.size())
      throw std::invalid_argument("gaussian dataset: mean/var length mismatch");
    for (double v : g->var_diag)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("gaussian dataset: variances must be finite and >= 0");
    for (double m : g->mean)
      if (!std::isfinite(m)) throw std::invalid_argument("gaussian dataset: non-finite mean");
  } else if (const auto* r = std::get_if<Ring8Data>(&kind)) {
    if (!(r->radius > 0.0) || !(r->stddev > 0.0))
      throw std::invalid_argument("ring8 dataset: radius and stddev must be positive");
  } else if (const auto* s = std::get_if<SwissRoll2dData>(&kind)) {
    if (!(s->noise >= 0.0)) throw std::invalid_argument("swissroll2d dataset: negative noise");
  } else if (const auto* t = std::get_if<TwoPointsData>(&kind)) {
    if (!std::isfinite(t->x0) || !std::isfinite(t->x1))
      throw std::invalid_argument("two_points dataset: non-finite atoms");
    if (!(t->p >= 0.0 && t->p <= 1.0))
      throw std::invalid_argument("two_points dataset: p must lie in [0, 1]");
  }
}

}  // namespace

DiscreteMeasure sample_toy(const ToyDataset& kind, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_toy: n must be >= 1");
  validate(kind);
  std::size_t d = toy_dim(kind);
  std::vector<double> pts;
  pts.reserve(n * d);

  if (const auto* g = std::get_if<GaussianData>(&kind)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k)
        pts.push_back(g->mean[k] + std::sqrt(g->var_diag[k]) * rng.normal());
  } else if (const auto* r = std::get_if<Ring8Data>(&kind)) {
    auto centers = ring8_centers(r->radius);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t mode = rng.index(8);
      pts.push_back(centers[mode][0] + r->stddev * rng.normal());
      pts.push_back(centers[mode][1] + r->stddev * rng.normal());
    }
  } else if (const auto* s = std::get_if<SwissRoll2dData>(&kind)) {
    // Standard 2D spiral: t in [1.5pi, 4.5pi], scaled to stay desk-size.
    for (std::size_t i = 0; i < n; ++i) {
      double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * rng.uniform());
      double scale = 1.0 / (4.5 * std::numbers::pi);
      pts.push_back(3.0 * scale * t * std::cos(t) + s->noise * rng.normal());
      pts.push_back(3.0 * scale * t * std::sin(t) + s->noise * rng.normal());
    }
  } else if (const auto* t = std::get_if<TwoPointsData>(&kind)) {
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back(rng.uniform() < t->p ? t->x1 : t->x0);
  }

  return DiscreteMeasure(std::move(pts), d, std::vector<double>(n, 1.0));
}

DiscreteMeasure pushforward(
    const DiscreteMeasure& mu,
    const std::function<std::vector<double>(std::span<const double>)>& g) {
  std::vector<double> pts;
  std::size_t out_dim = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::vector<double> y = g(mu.point(i));
    if (i == 0) {
      out_dim = y.size();
      if (out_dim == 0) throw std::invalid_argument("pushforward: map returned empty vector");
      pts.reserve(mu.size() * out_dim);
    }
    if (y.size() != out_dim)
      throw std::invalid_argument("pushforward: inconsistent image dimension");
    for (double v : y) {
      if (!std::isfinite(v))
        throw std::invalid_argument("pushforward: non-finite image of a support point");
      pts.push_back(v);
    }
  }
  return DiscreteMeasure(std::move(pts), out_dim, mu.weights());
}

}  // namespace potlab
