#include "potlab/transport_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace potlab {

namespace {

constexpr int kInvalid = -1;

// Workspace for one solve. Node ids: 0..n-1 sources, n..n+m-1 targets.
// Arc ids: a = i*m + j.
class Simplex {
 public:
  Simplex(std::span<const double> supply, std::span<const double> demand,
          const Matrix& cost)
      : n_(supply.size()),
        m_(demand.size()),
        cost_(cost.data),
        supply_(supply.begin(), supply.end()),
        demand_(demand.begin(), demand.end()) {
    validate();
    nodes_ = n_ + m_;
    flow_.assign(n_ * m_, 0.0);
    in_basis_.assign(n_ * m_, 0);
    adj_.assign(nodes_, {});
    parent_.assign(nodes_, kInvalid);
    pred_arc_.assign(nodes_, kInvalid);
    order_.reserve(nodes_);
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);

    // Potentials are propagated along tree paths of depth up to n+m, so
    // reduced costs carry O(depth * eps * |C|) noise; the entering threshold
    // must sit above it or the block search thrashes on phantom negatives.
    double scale = 1.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    double eps = std::numeric_limits<double>::epsilon();
    enter_tol_ = std::max(1e-13, 16.0 * double(n_ + m_) * eps) * scale;
  }

  TransportResult run() {
    northwest_corner();
    rebuild_tree();

    const std::size_t max_pivots = 2000 * (nodes_ + 10) + 100000;
    std::size_t stall = 0;
    bool bland = false;
    std::size_t pivots = 0;

    // Warm start: offer each target's cheapest arc before the block search
    // takes over; cuts the pivot count on cost-oblivious initial bases.
    for (std::size_t j = 0; j < m_; ++j) {
      std::size_t best = j;
      for (std::size_t i = 1; i < n_; ++i)
        if (cost_[i * m_ + j] < cost_[best]) best = i * m_ + j;
      if (!in_basis_[best] && reduced_cost(best) < -enter_tol_) {
        pivot(static_cast<int>(best));
        rebuild_tree();
        ++pivots;
      }
    }

    while (true) {
      int entering = bland ? find_entering_bland() : find_entering_block();
      if (entering == kInvalid) break;
      if (++pivots > max_pivots)
        throw std::runtime_error("solve_transport: pivot cap exceeded");

      double delta = pivot(entering);
      if (delta > 0.0) {
        stall = 0;
        bland = false;
      } else if (!bland && ++stall > 4 * nodes_) {
        bland = true;  // anti-cycling: smallest-index entering arc from now on
      }
      rebuild_tree();
    }

    TransportResult res;
    res.flow = std::move(flow_);
    res.f = std::move(u_);
    res.g = std::move(v_);
    res.pivots = pivots;
    double value = 0.0;
    for (std::size_t a = 0; a < n_ * m_; ++a)
      if (res.flow[a] != 0.0) value += res.flow[a] * cost_[a];
    res.value = value;
    return res;
  }

 private:
  void validate() const {
    if (n_ == 0 || m_ == 0)
      throw std::invalid_argument("solve_transport: empty marginal");
    if (cost_.size() != n_ * m_)
      throw std::invalid_argument("solve_transport: cost shape mismatch");
    double su = 0.0, sd = 0.0;
    for (double s : supply_) {
      if (!(s >= 0.0) || !std::isfinite(s))
        throw std::invalid_argument("solve_transport: bad supply");
      su += s;
    }
    for (double t : demand_) {
      if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("solve_transport: bad demand");
      sd += t;
    }
    if (std::abs(su - sd) > 1e-9)
      throw std::invalid_argument("solve_transport: supply/demand totals differ");
    for (double c : cost_)
      if (!std::isfinite(c))
        throw std::invalid_argument("solve_transport: non-finite cost entry");
  }

  std::size_t source_node(std::size_t arc) const { return arc / m_; }
  std::size_t target_node(std::size_t arc) const { return n_ + arc % m_; }

  void add_basis(std::size_t arc, double f) {
    in_basis_[arc] = 1;
    flow_[arc] = f;
    adj_[source_node(arc)].push_back(static_cast<int>(arc));
    adj_[target_node(arc)].push_back(static_cast<int>(arc));
  }

  void drop_basis(std::size_t arc) {
    in_basis_[arc] = 0;
    flow_[arc] = 0.0;
    for (std::size_t node : {source_node(arc), target_node(arc)}) {
      auto& lst = adj_[node];
      auto it = std::find(lst.begin(), lst.end(), static_cast<int>(arc));
      std::swap(*it, lst.back());
      lst.pop_back();
    }
  }

  // Initial spanning-tree basis with exactly n+m-1 arcs.
  void northwest_corner() {
    std::vector<double> a(supply_), b(demand_);
    std::size_t i = 0, j = 0;
    while (true) {
      double t = std::min(a[i], b[j]);
      add_basis(i * m_ + j, t);
      a[i] -= t;
      b[j] -= t;
      if (i + 1 == n_ && j + 1 == m_) break;
      if (a[i] == 0.0 && i + 1 < n_)
        ++i;
      else if (j + 1 < m_)
        ++j;
      else
        ++i;
    }
  }

  // BFS over basis arcs from node 0: parents, pred arcs and exact potentials
  // (u_i + v_j = C_ij on every tree arc).
  void rebuild_tree() {
    std::fill(parent_.begin(), parent_.end(), kInvalid);
    std::fill(pred_arc_.begin(), pred_arc_.end(), kInvalid);
    order_.clear();
    order_.push_back(0);
    parent_[0] = 0;
    u_[0] = 0.0;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      std::size_t cur = order_[head];
      for (int arc : adj_[cur]) {
        std::size_t s = source_node(arc), t = target_node(arc);
        std::size_t other = (cur == s) ? t : s;
        if (parent_[other] != kInvalid) continue;
        parent_[other] = static_cast<int>(cur);
        pred_arc_[other] = arc;
        if (other == t)
          v_[other - n_] = cost_[arc] - u_[s];
        else
          u_[other] = cost_[arc] - v_[t - n_];
        order_.push_back(other);
      }
    }
    if (order_.size() != nodes_)
      throw std::runtime_error("solve_transport: basis is not a spanning tree");
    depth_.assign(nodes_, 0);
    for (std::size_t k = 1; k < order_.size(); ++k)
      depth_[order_[k]] = depth_[static_cast<std::size_t>(parent_[order_[k]])] + 1;
  }

  double reduced_cost(std::size_t arc) const {
    return cost_[arc] - u_[arc / m_] - v_[arc % m_];
  }

  // Deterministic block search: scan arcs cyclically from next_arc_, keep the
  // most negative reduced cost, stop at the end of a block once a candidate
  // below the tolerance exists.
  int find_entering_block() {
    const std::size_t arcs = n_ * m_;
    const std::size_t block =
        std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(double(arcs))));
    double best = -enter_tol_;
    int best_arc = kInvalid;
    std::size_t a = next_arc_;
    std::size_t cnt = block;
    for (std::size_t seen = 0; seen < arcs; ++seen, ++a) {
      if (a == arcs) a = 0;
      if (!in_basis_[a]) {
        double r = reduced_cost(a);
        if (r < best) {
          best = r;
          best_arc = static_cast<int>(a);
        }
      }
      if (--cnt == 0) {
        if (best_arc != kInvalid) {
          next_arc_ = a + 1 == arcs ? 0 : a + 1;
          return best_arc;
        }
        cnt = block;
      }
    }
    if (best_arc != kInvalid) next_arc_ = (std::size_t(best_arc) + 1) % arcs;
    return best_arc;
  }

  int find_entering_bland() {
    for (std::size_t a = 0; a < n_ * m_; ++a)
      if (!in_basis_[a] && reduced_cost(a) < -enter_tol_) return static_cast<int>(a);
    return kInvalid;
  }

  // Apply one pivot. The cycle is the entering arc plus the two tree paths
  // to the join node; arcs alternate orientation (bipartite tree), so flow
  // decreases on every odd arc counted from either endpoint. The leaving-arc
  // tie-break follows Cunningham's rule (strict improvement on the source
  // branch, last tie wins on the target branch), which keeps the basis
  // strongly feasible and stops degenerate pivots from stalling.
  double pivot(int entering) {
    std::size_t p = source_node(entering), q = target_node(entering);

    // Collect both root paths up to the join node.
    path_src_.clear();
    path_tgt_.clear();
    std::size_t x = p, y = q;
    while (x != y) {
      if (depth_[x] >= depth_[y]) {
        path_src_.push_back(x);
        x = static_cast<std::size_t>(parent_[x]);
      } else {
        path_tgt_.push_back(y);
        y = static_cast<std::size_t>(parent_[y]);
      }
    }

    // Odd positions from the entering endpoints carry decreasing flow.
    double delta = std::numeric_limits<double>::infinity();
    int leaving = kInvalid;
    bool leaving_on_src = false;
    for (std::size_t k = 0; k < path_src_.size(); k += 2) {
      double fl = flow_[static_cast<std::size_t>(pred_arc_[path_src_[k]])];
      if (fl < delta) {
        delta = fl;
        leaving = pred_arc_[path_src_[k]];
        leaving_on_src = true;
      }
    }
    for (std::size_t k = 0; k < path_tgt_.size(); k += 2) {
      double fl = flow_[static_cast<std::size_t>(pred_arc_[path_tgt_[k]])];
      if (fl <= delta) {
        delta = fl;
        leaving = pred_arc_[path_tgt_[k]];
        leaving_on_src = false;
      }
    }
    (void)leaving_on_src;
    if (leaving == kInvalid)
      throw std::runtime_error("solve_transport: unbounded pivot");

    if (delta > 0.0) {
      double sign = -1.0;
      for (std::size_t k = 0; k < path_src_.size(); ++k, sign = -sign)
        flow_[static_cast<std::size_t>(pred_arc_[path_src_[k]])] += sign * delta;
      sign = -1.0;
      for (std::size_t k = 0; k < path_tgt_.size(); ++k, sign = -sign)
        flow_[static_cast<std::size_t>(pred_arc_[path_tgt_[k]])] += sign * delta;
    }
    drop_basis(static_cast<std::size_t>(leaving));
    add_basis(static_cast<std::size_t>(entering), delta);
    return delta;
  }

  std::size_t n_, m_, nodes_ = 0;
  std::vector<double> cost_;
  std::vector<double> supply_, demand_;
  std::vector<double> flow_;
  std::vector<char> in_basis_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_, pred_arc_;
  std::vector<std::size_t> order_, depth_;
  std::vector<double> u_, v_;
  std::vector<std::size_t> path_src_, path_tgt_;
  double enter_tol_ = 1e-12;
  std::size_t next_arc_ = 0;
};

}  // namespace

TransportResult solve_transport(std::span<const double> supply,
                                std::span<const double> demand,
                                const Matrix& cost) {
  Simplex s(supply, demand, cost);
  return s.run();
}

}  // namespace potlab
