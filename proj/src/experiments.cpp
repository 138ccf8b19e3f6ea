#include "potlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "potlab/exact_ot.hpp"

namespace potlab {

double w2sq_sorted_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("w2sq_sorted_1d: equal nonempty sizes required");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    s += t * t;
  }
  return s / double(a.size());
}

Prop1Result prop1_gaussian(double sigma2, double c_min, double c_max, double c_step,
                           std::size_t n_mc, Rng rng) {
  if (!(sigma2 > 0.0 && sigma2 < 1.0))
    throw std::invalid_argument("prop1_gaussian: sigma^2 must lie in (0, 1)");
  if (!(c_step > 0.0 && c_max > c_min))
    throw std::invalid_argument("prop1_gaussian: bad grid");
  if (n_mc < 2) throw std::invalid_argument("prop1_gaussian: n_mc too small");

  // Common random numbers across the whole grid keep both curves smooth in c,
  // so the argmins are stable at the grid resolution.
  std::vector<double> x(n_mc), z(n_mc), eps(n_mc);
  for (auto& v : x) v = rng.normal();
  for (auto& v : z) v = rng.normal();
  for (auto& v : eps) v = rng.normal();

  std::vector<double> xs(x);
  std::sort(xs.begin(), xs.end());
  std::vector<double> zs(z);
  std::sort(zs.begin(), zs.end());

  Prop1Result res;
  res.sigma2 = sigma2;
  for (double c = c_min; c <= c_max + 1e-12; c += c_step) res.grid.push_back(c);
  res.w_dagger_curve.assign(res.grid.size(), 0.0);
  res.w_c_curve.assign(res.grid.size(), 0.0);

  double sigma = std::sqrt(sigma2);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(res.grid.size()); ++k) {
    auto idx = static_cast<std::size_t>(k);
    double c = res.grid[idx];

    // Upper-bound objective: sigma^2 + W_2^2(X, c Z); c > 0 keeps zs sorted.
    double wd = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      double t = xs[i] - c * zs[i];
      wd += t * t;
    }
    res.w_dagger_curve[idx] = sigma2 + wd / double(n_mc);

    // True transport cost of the noisy model Y = c Z + sigma eps.
    std::vector<double> y(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) y[i] = c * z[i] + sigma * eps[i];
    std::sort(y.begin(), y.end());
    double wc = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      double t = xs[i] - y[i];
      wc += t * t;
    }
    res.w_c_curve[idx] = wc / double(n_mc);
  }

  auto argmin = [&](const std::vector<double>& curve) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
      if (curve[i] < curve[best]) best = i;
    return res.grid[best];
  };
  res.c_dagger = argmin(res.w_dagger_curve);
  res.c_star = argmin(res.w_c_curve);
  return res;
}

BlurrinessResult blurriness_demo(const DiscreteMeasure& x_atoms, const Matrix& q) {
  const std::size_t n = x_atoms.size();
  if (q.rows != n || q.cols == 0)
    throw std::invalid_argument("blurriness_demo: conditional shape mismatch");
  const std::size_t kz = q.cols, d = x_atoms.dim();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < kz; ++k) {
      if (q(i, k) < -1e-12)
        throw std::invalid_argument("blurriness_demo: negative conditional entry");
      row += q(i, k);
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("blurriness_demo: conditional rows must be simplex");
  }

  BlurrinessResult res;
  res.decoder_table = Matrix(kz, d);
  res.posterior = Matrix(kz, n);
  res.blurry.assign(kz, false);
  for (std::size_t k = 0; k < kz; ++k) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += x_atoms.weights()[i] * q(i, k);
    if (!(mass > 0.0))
      throw std::invalid_argument("blurriness_demo: latent atom with zero posterior mass");
    std::size_t contributors = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double post = x_atoms.weights()[i] * q(i, k) / mass;
      res.posterior(k, i) = post;
      if (post > 0.01) ++contributors;
      auto xi = x_atoms.point(i);
      for (std::size_t c = 0; c < d; ++c) res.decoder_table(k, c) += post * xi[c];
    }
    res.blurry[k] = contributors >= 2;
  }
  return res;
}

namespace {

using Vec2 = std::array<double, 2>;

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Minimal McShane extension of the anchor values: the pointwise max of
// downward unit cones, a global 1-Lipschitz function agreeing with the
// potentials on the supports.
struct Witness {
  std::vector<Vec2> anchors;
  std::vector<double> values;

  double operator()(const Vec2& p) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < anchors.size(); ++s)
      best = std::max(best, values[s] - dist(p, anchors[s]));
    return best;
  }
};

Vec2 central_diff_grad(const std::function<double(const Vec2&)>& f, const Vec2& p,
                       double h) {
  return {(f({p[0] + h, p[1]}) - f({p[0] - h, p[1]})) / (2.0 * h),
          (f({p[0], p[1] + h}) - f({p[0], p[1] - h})) / (2.0 * h)};
}

double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

}  // namespace

FragilityResult dual_fragility(const FragilityGeometry& geom, double epsilon,
                               std::optional<Vec2> bump_center) {
  if (epsilon < 0.0) throw std::invalid_argument("dual_fragility: epsilon must be >= 0");
  if (dist(geom.y0, geom.y1) < 1e-12)
    throw std::invalid_argument("dual_fragility: y0 and y1 must differ");

  DiscreteMeasure p_x = DiscreteMeasure::from_points(
      {{geom.x0[0], geom.x0[1]}, {geom.x1[0], geom.x1[1]}}, {1.0, 1.0});
  DiscreteMeasure p_g = DiscreteMeasure::from_points(
      {{geom.y0[0], geom.y0[1]}, {geom.y1[0], geom.y1[1]}}, {1.0, 1.0});

  Matrix c = cost_matrix(p_x, p_g, Euclidean{});
  TransportPlan plan = solve_primal(p_x, p_g, c);
  DualCertificate cert = dual_potentials(plan, c, p_x, p_g);

  Witness fstar;
  fstar.anchors = {geom.x0, geom.x1, geom.y0, geom.y1};
  fstar.values = {cert.potentials.f[0], cert.potentials.f[1], -cert.potentials.g[0],
                  -cert.potentials.g[1]};

  auto j_dual = [&](const std::function<double(const Vec2&)>& f) {
    return 0.5 * (f(geom.x0) + f(geom.x1)) - 0.5 * (f(geom.y0) + f(geom.y1));
  };

  const double h = 1e-6;
  std::ostringstream note;

  Vec2 eval_at = geom.y0;
  auto fstar_fn = [&](const Vec2& p) { return fstar(p); };
  Vec2 grad_star = central_diff_grad(fstar_fn, eval_at, h);
  if (norm(grad_star) < 1e-9) {
    // Cone apex exactly at y0: nudge the evaluation point off the apex.
    eval_at = {geom.y0[0] + 1e-9, geom.y0[1] + 1e-9};
    grad_star = central_diff_grad(fstar_fn, eval_at, h);
    note << "apex at y0, evaluation point perturbed by 1e-9; ";
  }

  FragilityResult res;
  res.epsilon = epsilon;
  res.w1 = plan.value;
  res.grad_fstar = grad_star;

  if (epsilon == 0.0) {
    Vec2 again = central_diff_grad(fstar_fn, eval_at, h);
    res.grad_feps = again;
    res.cosine = (grad_star[0] * again[0] + grad_star[1] * again[1]) /
                 (norm(grad_star) * norm(again));
    res.suboptimality = 0.0;
    res.lipschitz_violation = 0.0;
    note << "unperturbed witness";
    res.witness = note.str();
    return res;
  }

  // Pit modification: f_eps = min(f*, f*(p_c) - depth + ||p - p_c||), a local
  // cone whose apex sits near y0 but off the gradient axis, so the gradient
  // at y0 rotates while the four support values barely move.
  Vec2 gdir = grad_star;
  double gn = norm(gdir);
  Vec2 perp = {-gdir[1] / gn, gdir[0] / gn};

  double offset = 2.0 * epsilon;
  Vec2 pc{};
  double depth = 0.0, subopt = 0.0;
  double j_star = j_dual(fstar_fn);
  std::function<double(const Vec2&)> feps_fn;
  for (int attempt = 0; attempt < 48; ++attempt) {
    pc = bump_center ? *bump_center
                     : Vec2{geom.y0[0] + offset * perp[0], geom.y0[1] + offset * perp[1]};
    depth = bump_center ? 4.0 * epsilon : 2.0 * dist(pc, geom.y0);
    double apex = fstar(pc) - depth;
    feps_fn = [&fstar, pc, apex](const Vec2& p) {
      return std::min(fstar(p), apex + dist(p, pc));
    };
    subopt = j_star - j_dual(feps_fn);
    if (subopt <= epsilon || bump_center) break;
    offset *= 0.5;
  }

  res.suboptimality = subopt;
  res.grad_feps = central_diff_grad(feps_fn, eval_at, h);
  if (norm(res.grad_feps) < 1e-12 || norm(grad_star) < 1e-12)
    throw std::runtime_error("dual_fragility: vanishing witness gradient");
  res.cosine = (grad_star[0] * res.grad_feps[0] + grad_star[1] * res.grad_feps[1]) /
               (norm(grad_star) * norm(res.grad_feps));

  // Dense-grid pairwise 1-Lipschitz verification of the modified witness.
  double lo_x = 1e30, hi_x = -1e30, lo_y = 1e30, hi_y = -1e30;
  for (const Vec2& p : {geom.x0, geom.x1, geom.y0, geom.y1, pc}) {
    lo_x = std::min(lo_x, p[0]);
    hi_x = std::max(hi_x, p[0]);
    lo_y = std::min(lo_y, p[1]);
    hi_y = std::max(hi_y, p[1]);
  }
  lo_x -= 1.0, hi_x += 1.0, lo_y -= 1.0, hi_y += 1.0;
  const std::size_t grid_n = 25;
  std::vector<Vec2> pts;
  std::vector<double> vals;
  pts.reserve(grid_n * grid_n);
  for (std::size_t a = 0; a < grid_n; ++a)
    for (std::size_t b = 0; b < grid_n; ++b) {
      Vec2 p{lo_x + (hi_x - lo_x) * double(a) / double(grid_n - 1),
             lo_y + (hi_y - lo_y) * double(b) / double(grid_n - 1)};
      pts.push_back(p);
      vals.push_back(feps_fn(p));
    }
  double viol = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      viol = std::max(viol, std::abs(vals[a] - vals[b]) - dist(pts[a], pts[b]));
  res.lipschitz_violation = viol;

  note << "pit apex at (" << pc[0] << ", " << pc[1] << "), depth " << depth;
  res.witness = note.str();
  return res;
}

}  // namespace potlab
