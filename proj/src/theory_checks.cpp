#include "potlab/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "potlab/nn.hpp"

namespace potlab {

namespace {

double metric_cost(std::span<const double> x, std::span<const double> y, bool squared) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double t = x[k] - y[k];
    s += t * t;
  }
  return squared ? s : std::sqrt(s);
}

// c_G(x_i, z_j) = c(x_i, G(z_j)), evaluated pairwise (kept separate from the
// cost_matrix kernels so the two LP routes stay independent).
Matrix pullback_cost(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                     const PointMap& g, bool squared) {
  Matrix c(p_x.size(), p_z.size());
  std::vector<std::vector<double>> images;
  images.reserve(p_z.size());
  for (std::size_t j = 0; j < p_z.size(); ++j) {
    auto y = g(p_z.point(j));
    for (double v : y)
      if (!std::isfinite(v))
        throw std::invalid_argument("pullback cost: non-finite decoder image");
    images.push_back(std::move(y));
  }
  for (std::size_t i = 0; i < p_x.size(); ++i)
    for (std::size_t j = 0; j < p_z.size(); ++j)
      c(i, j) = metric_cost(p_x.point(i), images[j], squared);
  return c;
}

bool is_squared(const CostKind& cost) {
  if (std::holds_alternative<CustomCost>(cost))
    throw std::invalid_argument("theory checks need a metric cost kind");
  return std::holds_alternative<SqEuclidean>(cost);
}

double sample_variance(std::span<const double> xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= double(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return v / double(xs.size() - 1);
}

DiscreteMeasure draw_from_measure(const DiscreteMeasure& m, std::size_t n, Rng& rng) {
  std::vector<double> pts;
  pts.reserve(n * m.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto p = m.point(rng.categorical(m.weights()));
    pts.insert(pts.end(), p.begin(), p.end());
  }
  return DiscreteMeasure::uniform(std::move(pts), m.dim());
}

}  // namespace

CheckReport verify_theorem1(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                            const PointMap& g, const CostKind& cost) {
  bool squared = is_squared(cost);
  DiscreteMeasure p_g = pushforward(p_z, g);

  CheckReport rep;
  rep.name = "theorem1";
  rep.lhs = solve_primal(p_x, p_g, cost).value;
  Matrix c_g = pullback_cost(p_x, p_z, g, squared);
  rep.rhs = solve_primal(p_x, p_z, CustomCost{std::move(c_g)}).value;
  rep.tolerance = 1e-9;
  rep.abs_gap = std::abs(rep.lhs - rep.rhs);
  rep.passed = rep.abs_gap <= rep.tolerance;
  rep.details["n"] = double(p_x.size());
  rep.details["m"] = double(p_z.size());
  rep.details["squared_cost"] = squared ? 1.0 : 0.0;
  return rep;
}

CheckReport verify_factorization(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                                 const PointMap& g, const Matrix& q,
                                 const CostKind& cost) {
  const std::size_t n = p_x.size(), m = p_z.size();
  if (q.rows != n || q.cols != m)
    throw std::invalid_argument("verify_factorization: conditional shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (q(i, j) < -1e-12)
        throw std::invalid_argument("verify_factorization: negative conditional entry");
      row += q(i, j);
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("verify_factorization: conditional rows must be simplex");
  }

  // Aggregation constraint: the Z-marginal of q under p_x must equal p_z.
  double agg_viol = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += q(i, j) * p_x.weights()[i];
    agg_viol = std::max(agg_viol, std::abs(col - p_z.weights()[j]));
  }
  if (agg_viol > 1e-9)
    throw std::invalid_argument(
        "verify_factorization: aggregated posterior does not match the prior");

  bool squared = is_squared(cost);
  Matrix c_g = pullback_cost(p_x, p_z, g, squared);

  double gamma_cost = 0.0;
  double row_viol = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double gamma = q(i, j) * p_x.weights()[i];
      gamma_cost += gamma * c_g(i, j);
      row += gamma;
    }
    row_viol = std::max(row_viol, std::abs(row - p_x.weights()[i]));
  }

  CheckReport rep;
  rep.name = "factorization";
  rep.lhs = solve_primal(p_x, p_z, CustomCost{std::move(c_g)}).value;
  rep.rhs = gamma_cost;
  rep.tolerance = 1e-9;
  rep.abs_gap = std::max(0.0, rep.lhs - rep.rhs);
  rep.passed = rep.lhs <= rep.rhs + rep.tolerance && row_viol <= 1e-9 && agg_viol <= 1e-9;
  rep.details["bound_check"] = 1.0;
  rep.details["row_marginal_violation"] = row_viol;
  rep.details["col_marginal_violation"] = agg_viol;
  return rep;
}

CheckReport verify_corollary1(const DiscreteMeasure& p_x, const DiscreteMeasure& p_z,
                              const PointMap& g, double sigma2,
                              std::size_t n_samples, Rng rng) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("verify_corollary1: sigma^2 must be > 0");
  if (n_samples < 64) throw std::invalid_argument("verify_corollary1: n_samples must be >= 64");

  const std::size_t d = p_x.dim();
  Matrix c_g = pullback_cost(p_x, p_z, g, /*squared=*/true);
  double w_dagger = solve_primal(p_x, p_z, CustomCost{std::move(c_g)}).value;
  double rhs = double(d) * sigma2 + w_dagger;

  const std::size_t n_seeds = 10;
  std::vector<double> vals(n_seeds, 0.0);
  double sigma = std::sqrt(sigma2);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    Rng child = rng.split();
    std::vector<double> ypts;
    ypts.reserve(n_samples * d);
    for (std::size_t i = 0; i < n_samples; ++i) {
      std::size_t j = child.categorical(p_z.weights());
      auto img = g(p_z.point(j));
      for (std::size_t k = 0; k < d; ++k) ypts.push_back(img[k] + sigma * child.normal());
    }
    DiscreteMeasure model = DiscreteMeasure::uniform(std::move(ypts), d);
    DiscreteMeasure data = draw_from_measure(p_x, n_samples, child);
    vals[s] = solve_primal(data, model, SqEuclidean{}).value;
  }

  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= double(n_seeds);
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= double(n_seeds - 1);
  double stderr_ = std::sqrt(var / double(n_seeds));

  CheckReport rep;
  rep.name = "corollary1";
  rep.lhs = mean;
  rep.rhs = rhs;
  rep.tolerance = 3.0 * stderr_ + 0.05 * rhs;
  rep.abs_gap = std::max(0.0, rep.lhs - rep.rhs);
  rep.passed = rep.lhs <= rep.rhs + rep.tolerance;
  rep.details["bound_check"] = 1.0;
  rep.details["stderr"] = stderr_;
  rep.details["w_dagger"] = w_dagger;
  rep.details["d_sigma2"] = double(d) * sigma2;
  return rep;
}

CheckReport verify_lemma2(const PointMap& g, std::size_t n, double sigma2, Rng rng) {
  if (n < 10000) throw std::invalid_argument("verify_lemma2: n must be >= 10^4");

  double sigma = std::sqrt(sigma2);
  std::vector<double> gz(n), y(n);
  // Shared z draws for both sides.
  for (std::size_t i = 0; i < n; ++i) {
    double z = rng.normal();
    auto img = g(std::span<const double>(&z, 1));
    if (img.size() != 1)
      throw std::invalid_argument("verify_lemma2: map must have 1D output");
    gz[i] = img[0];
    y[i] = img[0] + sigma * rng.normal();
  }

  CheckReport rep;
  rep.name = "lemma2";
  rep.lhs = sample_variance(y);
  rep.rhs = sigma2 + sample_variance(gz);
  rep.tolerance = 3.0 * std::sqrt(2.0 / double(n - 1)) * rep.lhs;
  rep.abs_gap = std::abs(rep.lhs - rep.rhs);
  rep.passed = rep.abs_gap <= rep.tolerance;
  rep.details["sigma2"] = sigma2;
  rep.details["var_gz"] = rep.rhs - sigma2;
  return rep;
}

CheckReport duality_gap_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Matrix c = cost_matrix(mu, nu, Euclidean{});
  TransportPlan plan = solve_primal(mu, nu, c);
  DualCertificate cert = dual_potentials(plan, c, mu, nu);

  double feas_viol = 0.0, cs_viol = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) {
      double slack = cert.potentials.f[i] + cert.potentials.g[j] - c(i, j);
      feas_viol = std::max(feas_viol, slack);
      if (plan.gamma(i, j) > 0.0) cs_viol = std::max(cs_viol, std::abs(slack));
    }

  CheckReport rep;
  rep.name = "duality";
  rep.lhs = plan.value;
  rep.rhs = cert.dual_value;
  rep.tolerance = 1e-9;
  rep.abs_gap = std::abs(rep.lhs - rep.rhs);
  rep.passed = rep.abs_gap <= rep.tolerance && cert.lipschitz_violation <= 1e-9 &&
               feas_viol <= 1e-9 && cs_viol <= 1e-9;
  rep.details["lipschitz_violation"] = cert.lipschitz_violation;
  rep.details["feasibility_violation"] = feas_viol;
  rep.details["slackness_violation"] = cs_viol;
  return rep;
}

MlpNet random_map_net(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  return MlpNet({in_dim, 8, out_dim}, {Activation::Tanh, Activation::Linear}, rng);
}

PointMap net_as_map(const MlpNet& net) {
  return [net](std::span<const double> z) { return net.eval(z); };
}

namespace {

DiscreteMeasure random_measure(std::size_t max_n, std::size_t d, Rng& rng,
                               bool uniform_weights = false) {
  std::size_t n = 2 + rng.index(max_n - 1);
  std::vector<double> pts(n * d);
  for (double& v : pts) v = 2.0 * rng.normal();
  std::vector<double> w(n, 1.0);
  if (!uniform_weights)
    for (double& x : w) x = rng.uniform(0.2, 1.0);
  return DiscreteMeasure(std::move(pts), d, std::move(w));
}

CheckReport run_instance(const std::string& name, Rng rng, std::size_t idx) {
  if (name == "theorem1") {
    std::size_t dz = 1 + rng.index(3), dx = 1 + rng.index(3);
    DiscreteMeasure p_x = random_measure(64, dx, rng);
    DiscreteMeasure p_z = random_measure(64, dz, rng);
    MlpNet net = random_map_net(dz, dx, rng);
    CostKind cost = (idx % 2 == 0) ? CostKind{SqEuclidean{}} : CostKind{Euclidean{}};
    return verify_theorem1(p_x, p_z, net_as_map(net), cost);
  }
  if (name == "factorization") {
    std::size_t dz = 1 + rng.index(2), dx = 1 + rng.index(2);
    DiscreteMeasure p_x = random_measure(24, dx, rng);
    DiscreteMeasure p_z = random_measure(24, dz, rng);
    MlpNet net = random_map_net(dz, dx, rng);
    auto g = net_as_map(net);
    Matrix q(p_x.size(), p_z.size());
    if (idx % 2 == 0) {
      // Product coupling: q(z|x) = p_z(z).
      for (std::size_t i = 0; i < p_x.size(); ++i)
        for (std::size_t j = 0; j < p_z.size(); ++j) q(i, j) = p_z.weights()[j];
    } else {
      // Conditional extracted from the optimal plan; attains the optimum.
      Matrix c = pullback_cost(p_x, p_z, g, idx % 4 == 1);
      TransportPlan plan = solve_primal(p_x, p_z, CustomCost{c});
      for (std::size_t i = 0; i < p_x.size(); ++i)
        for (std::size_t j = 0; j < p_z.size(); ++j)
          q(i, j) = plan.gamma(i, j) / p_x.weights()[i];
    }
    CostKind cost = (idx % 4 == 1 || idx % 4 == 2) ? CostKind{SqEuclidean{}}
                                                   : CostKind{Euclidean{}};
    return verify_factorization(p_x, p_z, g, q, cost);
  }
  if (name == "corollary1") {
    std::size_t dz = 1 + rng.index(2), dx = 1 + rng.index(2);
    DiscreteMeasure p_x = random_measure(32, dx, rng);
    DiscreteMeasure p_z = random_measure(32, dz, rng);
    MlpNet net = random_map_net(dz, dx, rng);
    double sigma2 = rng.uniform(0.05, 0.5);
    return verify_corollary1(p_x, p_z, net_as_map(net), sigma2, 128, rng.split());
  }
  if (name == "lemma2") {
    MlpNet net = random_map_net(1, 1, rng);
    double sigma2 = rng.uniform(0.1, 1.0);
    return verify_lemma2(net_as_map(net), 100000, sigma2, rng.split());
  }
  if (name == "duality") {
    std::size_t d = 1 + rng.index(3);
    DiscreteMeasure mu = random_measure(32, d, rng);
    DiscreteMeasure nu = random_measure(32, d, rng);
    return duality_gap_check(mu, nu);
  }
  throw std::invalid_argument("unknown check: " + name);
}

}  // namespace

std::vector<std::string> check_suite_names() {
  return {"theorem1", "factorization", "corollary1", "lemma2", "duality"};
}

std::vector<CheckReport> run_check_suite(const std::string& name, std::size_t instances,
                                         std::uint64_t base_seed) {
  auto names = check_suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string msg = "unknown check '" + name + "'; valid names:";
    for (const auto& n : names) msg += " " + n;
    throw std::invalid_argument(msg);
  }
  if (instances == 0)
    throw std::invalid_argument("check suite needs at least one instance");

  // Pre-split per-instance rngs so the parallel loop is order-independent.
  Rng parent(base_seed);
  std::vector<std::uint64_t> seeds(instances);
  for (auto& s : seeds) s = parent.next_u64();

  std::vector<CheckReport> reports(instances);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(instances); ++k) {
    auto i = static_cast<std::size_t>(k);
    reports[i] = run_instance(name, Rng(seeds[i]), i);
    reports[i].details["instance"] = double(i);
  }
  return reports;
}

}  // namespace potlab
