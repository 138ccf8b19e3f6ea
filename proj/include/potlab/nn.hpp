#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "potlab/autodiff.hpp"
#include "potlab/kernels.hpp"
#include "potlab/rng.hpp"

namespace potlab {

enum class Activation { Relu, Tanh, Linear, Sigmoid };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

// One weight layer: W is rows x cols at w_offset, bias is rows at b_offset.
struct LayerShape {
  std::size_t rows = 0, cols = 0;
  std::size_t w_offset = 0, b_offset = 0;
};

// Flat f64 parameter storage plus the shape table that partitions it.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<LayerShape> shapes, std::vector<double> data);

  std::size_t count() const { return data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }

  double weight(std::size_t layer, std::size_t r, std::size_t c) const {
    const LayerShape& s = shapes_[layer];
    return data_[s.w_offset + r * s.cols + c];
  }
  double bias(std::size_t layer, std::size_t r) const {
    return data_[shapes_[layer].b_offset + r];
  }

  void check_finite() const;

 private:
  std::vector<LayerShape> shapes_;
  std::vector<double> data_;
};

// Fully connected net with one activation per weight layer. Parameters are
// initialized uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
class MlpNet {
 public:
  MlpNet() = default;
  MlpNet(std::vector<std::size_t> widths, std::vector<Activation> acts, Rng& rng);

  // Rebuild a net around an existing parameter vector (checkpoint load).
  MlpNet(std::vector<std::size_t> widths, std::vector<Activation> acts,
         std::vector<double> params);

  std::size_t in_dim() const { return widths_.front(); }
  std::size_t out_dim() const { return widths_.back(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return acts_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  // Value-only forward; deterministic, bit-identical across calls.
  std::vector<double> eval(std::span<const double> x) const;

  // Row-major batch n x in_dim -> n x out_dim. The parallel path gives the
  // identical result as the serial one (rows are independent).
  void eval_batch(std::span<const double> xs, std::size_t n, std::vector<double>& out,
                  kernels::Exec exec = kernels::Exec::Parallel) const;

  // Smallest |pre-activation| over all relu units for the input; used by
  // grad_check to resample away from kinks.
  double min_abs_relu_preact(std::span<const double> x) const;

  // One tape leaf per parameter, in flat order.
  std::vector<Var> make_param_vars(Tape& t) const;

  // Tape forward. Throws on width mismatch or non-finite inputs.
  std::vector<Var> forward(Tape& t, std::span<const Var> x,
                           std::span<const Var> params) const;

 private:
  void build_shapes();

  std::vector<std::size_t> widths_;
  std::vector<Activation> acts_;
  ParamVector params_;
};

// Gradient readout for one net after tape.backward().
std::vector<double> read_grads(const Tape& t, std::span<const Var> param_vars);

// sgd: p <- p - lr * g. adam: standard bias-corrected moments. step() throws
// std::runtime_error on a non-finite gradient and leaves params untouched.
class Optimizer {
 public:
  struct AdamConfig {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  };

  static Optimizer sgd(double lr);
  static Optimizer adam(AdamConfig cfg);

  void step(std::vector<double>& params, std::span<const double> grad);

 private:
  enum class Kind { Sgd, Adam };
  Kind kind_ = Kind::Sgd;
  double lr_ = 0.0;
  AdamConfig adam_{};
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;
};

// Autodiff vs central finite differences (step h) on an arbitrary scalar loss
// of a flat parameter vector. build must be a pure function of the params.
// Relative error is |ad - fd| / max(1, |ad|, |fd|).
GradCheckResult grad_check(
    std::vector<double>& params,
    const std::function<Var(Tape&, std::span<const Var>)>& build, double h = 1e-5);

// Convenience form for a single net.
GradCheckResult grad_check(
    MlpNet& net,
    const std::function<Var(Tape&, const MlpNet&, std::span<const Var>)>& build,
    double h = 1e-5);

}  // namespace potlab
