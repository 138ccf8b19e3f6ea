#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace potlab {

class Tape;

// Handle to a tape node. Cheap to copy; only valid for the tape that made it.
struct Var {
  std::int32_t id = -1;
};

// Reverse-mode tape: a flat node list in topological (insertion) order, with
// per-argument local partials recorded during the forward pass. One backward
// pass per forward pass; a second backward on the same tape throws.
class Tape {
 public:
  Tape() = default;

  Var leaf(double value);
  Var constant(double value) { return leaf(value); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var add_const(Var a, double c);
  Var mul_const(Var a, double c);

  Var tanh_fn(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var log_fn(Var a);
  Var exp_fn(Var a);
  Var square(Var a);
  Var sqrt_fn(Var a);
  // Value clamped to [lo, hi]; gradient 1 strictly inside, 0 outside.
  Var clamp(Var a, double lo, double hi);

  // b + sum_k w_k * x_k (fused; the hot path of every net layer).
  Var affine(Var bias, std::span<const Var> x, std::span<const Var> w);
  Var sum(std::span<const Var> xs);
  Var mean(std::span<const Var> xs);

  double value(Var v) const { return vals_[static_cast<std::size_t>(v.id)]; }

  // Seeds d(loss)/d(loss) = 1 and accumulates adjoints of every node.
  // Throws if loss is invalid or the tape was already consumed.
  void backward(Var loss);
  double adjoint(Var v) const;

  std::size_t size() const { return vals_.size(); }
  bool consumed() const { return consumed_; }

  // Clears nodes but keeps buffer capacity (tapes are rebuilt every step).
  void reset();

 private:
  Var push(double value, std::span<const std::int32_t> args,
           std::span<const double> partials);
  Var push2(double value, Var a, double pa, Var b, double pb);
  Var push1(double value, Var a, double pa);

  std::vector<double> vals_;
  std::vector<std::uint32_t> arg_off_;
  std::vector<std::uint32_t> arg_cnt_;
  std::vector<std::int32_t> args_;
  std::vector<double> partials_;
  std::vector<double> adjoint_;
  std::vector<std::int32_t> scratch_ids_;
  std::vector<double> scratch_ps_;
  bool consumed_ = false;
};

}  // namespace potlab
