#include "potlab/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace potlab {

Var Tape::push(double value, std::span<const std::int32_t> args,
               std::span<const double> partials) {
  if (consumed_)
    throw std::runtime_error("Tape: already consumed by backward; reset() first");
  vals_.push_back(value);
  arg_off_.push_back(static_cast<std::uint32_t>(args_.size()));
  arg_cnt_.push_back(static_cast<std::uint32_t>(args.size()));
  args_.insert(args_.end(), args.begin(), args.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  return Var{static_cast<std::int32_t>(vals_.size() - 1)};
}

Var Tape::push1(double value, Var a, double pa) {
  std::int32_t ids[1] = {a.id};
  double ps[1] = {pa};
  return push(value, ids, ps);
}

Var Tape::push2(double value, Var a, double pa, Var b, double pb) {
  std::int32_t ids[2] = {a.id, b.id};
  double ps[2] = {pa, pb};
  return push(value, ids, ps);
}

Var Tape::leaf(double value) { return push(value, {}, {}); }

Var Tape::add(Var a, Var b) { return push2(value(a) + value(b), a, 1.0, b, 1.0); }
Var Tape::sub(Var a, Var b) { return push2(value(a) - value(b), a, 1.0, b, -1.0); }
Var Tape::mul(Var a, Var b) { return push2(value(a) * value(b), a, value(b), b, value(a)); }
Var Tape::div(Var a, Var b) {
  double vb = value(b);
  return push2(value(a) / vb, a, 1.0 / vb, b, -value(a) / (vb * vb));
}
Var Tape::neg(Var a) { return push1(-value(a), a, -1.0); }
Var Tape::add_const(Var a, double c) { return push1(value(a) + c, a, 1.0); }
Var Tape::mul_const(Var a, double c) { return push1(value(a) * c, a, c); }

Var Tape::tanh_fn(Var a) {
  double t = std::tanh(value(a));
  return push1(t, a, 1.0 - t * t);
}
Var Tape::relu(Var a) {
  double v = value(a);
  return push1(v > 0.0 ? v : 0.0, a, v > 0.0 ? 1.0 : 0.0);
}
Var Tape::sigmoid(Var a) {
  double s = 1.0 / (1.0 + std::exp(-value(a)));
  return push1(s, a, s * (1.0 - s));
}
Var Tape::log_fn(Var a) { return push1(std::log(value(a)), a, 1.0 / value(a)); }
Var Tape::exp_fn(Var a) {
  double e = std::exp(value(a));
  return push1(e, a, e);
}
Var Tape::square(Var a) { return push1(value(a) * value(a), a, 2.0 * value(a)); }
Var Tape::sqrt_fn(Var a) {
  double s = std::sqrt(value(a));
  // Subgradient 0 at the origin keeps euclidean costs finite when a point
  // reconstructs exactly.
  return push1(s, a, s > 0.0 ? 0.5 / s : 0.0);
}
Var Tape::clamp(Var a, double lo, double hi) {
  double v = value(a);
  double c = v < lo ? lo : (v > hi ? hi : v);
  return push1(c, a, (v > lo && v < hi) ? 1.0 : 0.0);
}

Var Tape::affine(Var bias, std::span<const Var> x, std::span<const Var> w) {
  if (x.size() != w.size()) throw std::invalid_argument("Tape::affine: length mismatch");
  scratch_ids_.clear();
  scratch_ps_.clear();
  scratch_ids_.push_back(bias.id);
  scratch_ps_.push_back(1.0);
  double acc = value(bias);
  for (std::size_t k = 0; k < x.size(); ++k) {
    double xv = value(x[k]), wv = value(w[k]);
    acc += wv * xv;
    scratch_ids_.push_back(x[k].id);
    scratch_ps_.push_back(wv);
    scratch_ids_.push_back(w[k].id);
    scratch_ps_.push_back(xv);
  }
  return push(acc, scratch_ids_, scratch_ps_);
}

Var Tape::sum(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("Tape::sum: empty");
  scratch_ids_.clear();
  scratch_ps_.clear();
  double acc = 0.0;
  for (Var v : xs) {
    acc += value(v);
    scratch_ids_.push_back(v.id);
    scratch_ps_.push_back(1.0);
  }
  return push(acc, scratch_ids_, scratch_ps_);
}

Var Tape::mean(std::span<const Var> xs) {
  return mul_const(sum(xs), 1.0 / static_cast<double>(xs.size()));
}

void Tape::backward(Var loss) {
  if (consumed_) throw std::runtime_error("Tape: second backward on the same tape");
  if (loss.id < 0 || static_cast<std::size_t>(loss.id) >= vals_.size())
    throw std::invalid_argument("Tape::backward: invalid loss node");
  consumed_ = true;
  adjoint_.assign(vals_.size(), 0.0);
  adjoint_[static_cast<std::size_t>(loss.id)] = 1.0;
  for (std::size_t k = vals_.size(); k-- > 0;) {
    double a = adjoint_[k];
    if (a == 0.0) continue;
    std::uint32_t off = arg_off_[k], cnt = arg_cnt_[k];
    for (std::uint32_t t = 0; t < cnt; ++t)
      adjoint_[static_cast<std::size_t>(args_[off + t])] += a * partials_[off + t];
  }
}

double Tape::adjoint(Var v) const {
  if (!consumed_) throw std::runtime_error("Tape::adjoint: backward has not run");
  return adjoint_[static_cast<std::size_t>(v.id)];
}

void Tape::reset() {
  vals_.clear();
  arg_off_.clear();
  arg_cnt_.clear();
  args_.clear();
  partials_.clear();
  adjoint_.clear();
  consumed_ = false;
}

}  // namespace potlab
