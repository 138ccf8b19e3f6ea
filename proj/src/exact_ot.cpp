#include "potlab/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "potlab/transport_simplex.hpp"

namespace potlab {

Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const CostKind& kind, kernels::Exec exec) {
  if (const auto* custom = std::get_if<CustomCost>(&kind)) {
    const Matrix& c = custom->matrix;
    if (c.rows != mu.size() || c.cols != nu.size())
      throw std::invalid_argument("cost_matrix: custom matrix shape mismatch");
    for (double v : c.data)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("cost_matrix: custom entries must be finite and >= 0");
    return c;
  }
  if (mu.dim() != nu.dim())
    throw std::invalid_argument("cost_matrix: point dimension mismatch");
  Matrix out;
  if (std::holds_alternative<SqEuclidean>(kind))
    kernels::pairwise_sq_dist(mu.flat_points(), mu.size(), nu.flat_points(),
                              nu.size(), mu.dim(), out, exec);
  else
    kernels::pairwise_dist(mu.flat_points(), mu.size(), nu.flat_points(),
                           nu.size(), mu.dim(), out, exec);
  return out;
}

namespace {

// Clamp weights below 1e-15 to zero and renormalize; tiny atoms make the
// simplex basis numerically singular.
std::vector<double> cleaned_weights(const std::vector<double>& w) {
  std::vector<double> out(w);
  double sum = 0.0;
  for (double& x : out) {
    if (x < 1e-15) x = 0.0;
    sum += x;
  }
  if (!(sum > 0.0))
    throw std::invalid_argument("solve_primal: all weights clamped to zero");
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace

TransportPlan solve_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const Matrix& cost) {
  if (cost.rows != mu.size() || cost.cols != nu.size())
    throw std::invalid_argument("solve_primal: cost shape mismatch");
  std::vector<double> a = cleaned_weights(mu.weights());
  std::vector<double> b = cleaned_weights(nu.weights());

  // Zero-weight atoms are dropped for the solve and restored as zero
  // rows/columns, keeping gamma indexed like the inputs.
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) rows.push_back(i);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (b[j] > 0.0) cols.push_back(j);

  Matrix sub(rows.size(), cols.size());
  std::vector<double> sa(rows.size()), sb(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) sa[i] = a[rows[i]];
  for (std::size_t j = 0; j < cols.size(); ++j) sb[j] = b[cols[j]];
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      sub(i, j) = cost(rows[i], cols[j]);

  TransportResult r = solve_transport(sa, sb, sub);

  TransportPlan plan;
  plan.gamma = Matrix(mu.size(), nu.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      plan.gamma(rows[i], cols[j]) = r.flow[i * cols.size() + j];
  plan.value = r.value;
  return plan;
}

TransportPlan solve_primal(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const CostKind& kind) {
  return solve_primal(mu, nu, cost_matrix(mu, nu, kind));
}

namespace {

// Aligns per-component potential constants so that f_i + g_j <= C_ij holds
// across components: shifts s_c must satisfy s_a - s_b <= min over pairs
// (i in a, j in b) of C_ij - f_i - g_j, a shortest-path system on the
// component quotient graph. A negative cycle certifies a non-optimal plan.
void align_components(std::vector<double>& f, std::vector<double>& g,
                      const std::vector<int>& comp_f, const std::vector<int>& comp_g,
                      int n_comp, const Matrix& cost) {
  if (n_comp <= 1) return;
  const double inf = std::numeric_limits<double>::infinity();
  Matrix w(static_cast<std::size_t>(n_comp), static_cast<std::size_t>(n_comp), inf);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      int a = comp_f[i], b = comp_g[j];
      if (a == b) continue;
      double slack = cost(i, j) - f[i] - g[j];
      if (slack < w(static_cast<std::size_t>(a), static_cast<std::size_t>(b)))
        w(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = slack;
    }

  // Bellman-Ford from a virtual source at distance 0 to every component;
  // d_a <= d_b + w_ba yields s = d satisfying s_a - s_b <= w_ab.
  std::vector<double> d(static_cast<std::size_t>(n_comp), 0.0);
  for (int pass = 0; pass <= n_comp; ++pass) {
    bool changed = false;
    for (int b = 0; b < n_comp; ++b)
      for (int a = 0; a < n_comp; ++a) {
        double wab = w(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        if (wab < inf && d[static_cast<std::size_t>(a)] >
                             d[static_cast<std::size_t>(b)] + wab) {
          d[static_cast<std::size_t>(a)] = d[static_cast<std::size_t>(b)] + wab;
          changed = true;
        }
      }
    if (!changed) break;
    if (pass == n_comp)
      throw std::invalid_argument(
          "dual_potentials: negative adjustment cycle (plan is not optimal)");
  }
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += d[static_cast<std::size_t>(comp_f[i])];
  for (std::size_t j = 0; j < g.size(); ++j) g[j] -= d[static_cast<std::size_t>(comp_g[j])];
}

}  // namespace

DualCertificate dual_potentials(const TransportPlan& plan, const Matrix& cost,
                                const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
  const std::size_t n = mu.size(), m = nu.size();
  if (plan.gamma.rows != n || plan.gamma.cols != m || cost.rows != n || cost.cols != m)
    throw std::invalid_argument("dual_potentials: shape mismatch");

  // Propagate tightness f_i + g_j = C_ij over the support graph, component by
  // component.
  std::vector<double> f(n, 0.0), g(m, 0.0);
  std::vector<int> comp_f(n, -1), comp_g(m, -1);
  int n_comp = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp_f[start] != -1) continue;
    comp_f[start] = n_comp;
    f[start] = 0.0;
    stack.assign(1, start);  // encode sources as i, targets as n + j
    while (!stack.empty()) {
      std::size_t node = stack.back();
      stack.pop_back();
      if (node < n) {
        for (std::size_t j = 0; j < m; ++j)
          if (plan.gamma(node, j) > 0.0 && comp_g[j] == -1) {
            comp_g[j] = n_comp;
            g[j] = cost(node, j) - f[node];
            stack.push_back(n + j);
          }
      } else {
        std::size_t j = node - n;
        for (std::size_t i = 0; i < n; ++i)
          if (plan.gamma(i, j) > 0.0 && comp_f[i] == -1) {
            comp_f[i] = n_comp;
            f[i] = cost(i, j) - g[j];
            stack.push_back(i);
          }
      }
    }
    ++n_comp;
  }
  for (std::size_t j = 0; j < m; ++j)
    if (comp_g[j] == -1) {
      comp_g[j] = n_comp++;
      g[j] = 0.0;  // isolated target atom (zero weight); pinned by alignment
    }

  align_components(f, g, comp_f, comp_g, n_comp, cost);

  // c-transform pass: canonical tight potentials. Keeps feasibility and the
  // support tightness, never decreases the dual objective, and makes f
  // 1-Lipschitz across the source support for metric costs.
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) best = std::min(best, cost(i, j) - g[j]);
    f[i] = best;
  }
  for (std::size_t j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) best = std::min(best, cost(i, j) - f[i]);
    g[j] = best;
  }

  DualCertificate cert;
  cert.dual_value = 0.0;
  for (std::size_t i = 0; i < n; ++i) cert.dual_value += f[i] * mu.weights()[i];
  for (std::size_t j = 0; j < m; ++j) cert.dual_value += g[j] * nu.weights()[j];
  if (std::abs(cert.dual_value - plan.value) > 1e-6)
    throw std::invalid_argument("dual_potentials: duality gap exceeds 1e-6 (plan rejected)");

  double viol = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      double dist = 0.0;
      auto xi = mu.point(i), xk = mu.point(k);
      for (std::size_t c = 0; c < mu.dim(); ++c) {
        double t = xi[c] - xk[c];
        dist += t * t;
      }
      viol = std::max(viol, std::abs(f[i] - f[k]) - std::sqrt(dist));
    }
  cert.lipschitz_violation = viol;
  cert.potentials = DualPotentials{std::move(f), std::move(g)};
  return cert;
}

double hungarian(const Matrix& cost) {
  if (cost.rows != cost.cols || cost.rows == 0)
    throw std::invalid_argument("hungarian: square nonempty matrix required");
  const int n = static_cast<int>(cost.rows);
  const double inf = std::numeric_limits<double>::infinity();

  // Shortest-augmenting-path assignment with row/column potentials;
  // 1-based arrays with a sentinel column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

double assignment_oracle(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const Matrix& cost) {
  const std::size_t n = mu.size();
  if (n != nu.size())
    throw std::invalid_argument("assignment_oracle: supports must have equal size");
  for (double w : mu.weights())
    if (std::abs(w - 1.0 / double(n)) > 1e-12)
      throw std::invalid_argument("assignment_oracle: mu is not uniform");
  for (double w : nu.weights())
    if (std::abs(w - 1.0 / double(n)) > 1e-12)
      throw std::invalid_argument("assignment_oracle: nu is not uniform");
  if (cost.rows != n || cost.cols != n)
    throw std::invalid_argument("assignment_oracle: cost shape mismatch");
  return hungarian(cost) / double(n);
}

}  // namespace potlab
