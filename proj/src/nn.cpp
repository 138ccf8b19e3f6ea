#include "potlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace potlab {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string activation_to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "linear";
}

ParamVector::ParamVector(std::vector<LayerShape> shapes, std::vector<double> data)
    : shapes_(std::move(shapes)), data_(std::move(data)) {
  std::size_t expect = 0;
  for (const auto& s : shapes_) {
    if (s.w_offset != expect || s.b_offset != expect + s.rows * s.cols)
      throw std::invalid_argument("ParamVector: offsets do not partition the data");
    expect = s.b_offset + s.rows;
  }
  if (expect != data_.size())
    throw std::invalid_argument("ParamVector: size does not match shape table");
  check_finite();
}

void ParamVector::check_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) throw std::runtime_error("ParamVector: non-finite entry");
}

void MlpNet::build_shapes() {
  if (widths_.size() < 2) throw std::invalid_argument("MlpNet: need at least two widths");
  for (std::size_t w : widths_)
    if (w == 0) throw std::invalid_argument("MlpNet: zero width");
  if (acts_.size() != widths_.size() - 1)
    throw std::invalid_argument("MlpNet: one activation per weight layer required");
}

MlpNet::MlpNet(std::vector<std::size_t> widths, std::vector<Activation> acts, Rng& rng)
    : widths_(std::move(widths)), acts_(std::move(acts)) {
  build_shapes();
  std::vector<LayerShape> shapes;
  std::vector<double> data;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    std::size_t in = widths_[l], out = widths_[l + 1];
    shapes.push_back({out, in, off, off + out * in});
    off += out * in + out;
    double a = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t k = 0; k < out * in; ++k) data.push_back(rng.uniform(-a, a));
    for (std::size_t k = 0; k < out; ++k) data.push_back(0.0);
  }
  params_ = ParamVector(std::move(shapes), std::move(data));
}

MlpNet::MlpNet(std::vector<std::size_t> widths, std::vector<Activation> acts,
               std::vector<double> params)
    : widths_(std::move(widths)), acts_(std::move(acts)) {
  build_shapes();
  std::vector<LayerShape> shapes;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    std::size_t in = widths_[l], out = widths_[l + 1];
    shapes.push_back({out, in, off, off + out * in});
    off += out * in + out;
  }
  params_ = ParamVector(std::move(shapes), std::move(params));
}

namespace {

inline double activate(Activation a, double v) {
  switch (a) {
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Linear: return v;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

}  // namespace

std::vector<double> MlpNet::eval(std::span<const double> x) const {
  if (x.size() != in_dim()) throw std::invalid_argument("MlpNet::eval: input width mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("MlpNet::eval: non-finite input");
  std::vector<double> cur(x.begin(), x.end()), next;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    std::size_t in = widths_[l], out = widths_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = params_.bias(l, r);
      for (std::size_t c = 0; c < in; ++c) acc += params_.weight(l, r, c) * cur[c];
      next[r] = activate(acts_[l], acc);
    }
    cur.swap(next);
  }
  return cur;
}

void MlpNet::eval_batch(std::span<const double> xs, std::size_t n,
                        std::vector<double>& out, kernels::Exec exec) const {
  std::size_t din = in_dim(), dout = out_dim();
  if (xs.size() != n * din) throw std::invalid_argument("MlpNet::eval_batch: shape mismatch");
  out.assign(n * dout, 0.0);
  if (exec == kernels::Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) {
      auto y = eval(xs.subspan(i * din, din));
      std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(i * dout));
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    auto y = eval(xs.subspan(static_cast<std::size_t>(i) * din, din));
    std::copy(y.begin(), y.end(),
              out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * dout));
  }
}

double MlpNet::min_abs_relu_preact(std::span<const double> x) const {
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> cur(x.begin(), x.end()), next;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    std::size_t in = widths_[l], out = widths_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = params_.bias(l, r);
      for (std::size_t c = 0; c < in; ++c) acc += params_.weight(l, r, c) * cur[c];
      if (acts_[l] == Activation::Relu) best = std::min(best, std::abs(acc));
      next[r] = activate(acts_[l], acc);
    }
    cur.swap(next);
  }
  return best;
}

std::vector<Var> MlpNet::make_param_vars(Tape& t) const {
  std::vector<Var> vars;
  vars.reserve(params_.count());
  for (double p : params_.data()) vars.push_back(t.leaf(p));
  return vars;
}

std::vector<Var> MlpNet::forward(Tape& t, std::span<const Var> x,
                                 std::span<const Var> params) const {
  if (x.size() != in_dim())
    throw std::invalid_argument("MlpNet::forward: input width mismatch");
  if (params.size() != params_.count())
    throw std::invalid_argument("MlpNet::forward: parameter count mismatch");
  for (Var v : x)
    if (!std::isfinite(t.value(v)))
      throw std::invalid_argument("MlpNet::forward: non-finite input");

  std::vector<Var> cur(x.begin(), x.end()), next, wrow;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const LayerShape& s = params_.shapes()[l];
    std::size_t in = widths_[l], out = widths_[l + 1];
    next.clear();
    for (std::size_t r = 0; r < out; ++r) {
      wrow.clear();
      for (std::size_t c = 0; c < in; ++c) wrow.push_back(params[s.w_offset + r * in + c]);
      Var z = t.affine(params[s.b_offset + r], cur, wrow);
      switch (acts_[l]) {
        case Activation::Relu: z = t.relu(z); break;
        case Activation::Tanh: z = t.tanh_fn(z); break;
        case Activation::Sigmoid: z = t.sigmoid(z); break;
        case Activation::Linear: break;
      }
      next.push_back(z);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> read_grads(const Tape& t, std::span<const Var> param_vars) {
  std::vector<double> g;
  g.reserve(param_vars.size());
  for (Var v : param_vars) g.push_back(t.adjoint(v));
  return g;
}

Optimizer Optimizer::sgd(double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("sgd: lr must be >= 0");
  Optimizer o;
  o.kind_ = Kind::Sgd;
  o.lr_ = lr;
  return o;
}

Optimizer Optimizer::adam(AdamConfig cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("adam: lr must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  Optimizer o;
  o.kind_ = Kind::Adam;
  o.adam_ = cfg;
  return o;
}

void Optimizer::step(std::vector<double>& params, std::span<const double> grad) {
  if (params.size() != grad.size())
    throw std::invalid_argument("Optimizer::step: length mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw std::runtime_error("Optimizer::step: non-finite gradient (step aborted)");

  if (kind_ == Kind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  double b1t = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  double b2t = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = adam_.beta1 * m_[i] + (1.0 - adam_.beta1) * grad[i];
    v_[i] = adam_.beta2 * v_[i] + (1.0 - adam_.beta2) * grad[i] * grad[i];
    double mhat = m_[i] / b1t, vhat = v_[i] / b2t;
    params[i] -= adam_.lr * mhat / (std::sqrt(vhat) + adam_.eps);
  }
}

GradCheckResult grad_check(
    std::vector<double>& params,
    const std::function<Var(Tape&, std::span<const Var>)>& build, double h) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (double p : params) vars.push_back(tape.leaf(p));
  Var loss = build(tape, vars);
  tape.backward(loss);
  std::vector<double> ad = read_grads(tape, vars);

  auto eval_at = [&](std::size_t k, double delta) {
    Tape t2;
    std::vector<Var> v2;
    v2.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      v2.push_back(t2.leaf(params[i] + (i == k ? delta : 0.0)));
    return t2.value(build(t2, v2));
  };

  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double fd = (eval_at(k, h) - eval_at(k, -h)) / (2.0 * h);
    double err = std::abs(ad[k] - fd) / std::max({1.0, std::abs(ad[k]), std::abs(fd)});
    if (err > res.max_rel_err) {
      res.max_rel_err = err;
      res.worst_param = k;
    }
  }
  return res;
}

GradCheckResult grad_check(
    MlpNet& net,
    const std::function<Var(Tape&, const MlpNet&, std::span<const Var>)>& build,
    double h) {
  return grad_check(
      net.params().data(),
      [&](Tape& t, std::span<const Var> vars) { return build(t, net, vars); }, h);
}

}  // namespace potlab
