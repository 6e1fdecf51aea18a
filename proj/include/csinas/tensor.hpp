// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "csinas/rng.hpp"

namespace csinas {

using Shape = std::vector<int>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense f64 tensor node. Gradients live beside values; the tape holds the
// backward program. f64 everywhere: desk-scale nets are small enough that
// memory does not matter and gradient checks need the headroom.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // lazily sized, zero-filled on first touch
  bool requires_grad = false;

  int64_t size() const { return static_cast<int64_t>(value.size()); }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }

  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
};

using Tensor = std::shared_ptr<TensorNode>;

Tensor tensor_zeros(const Shape& s, bool requires_grad = false);
Tensor tensor_full(const Shape& s, double v, bool requires_grad = false);
Tensor tensor_from(const Shape& s, std::vector<double> data, bool requires_grad = false);
Tensor tensor_randn(const Shape& s, Rng& rng, double stddev, bool requires_grad = false);

// Backward program for one forward pass. Rebuilt every pass: record ops during
// forward, call backward(loss) once, then reset before the next pass.
class Tape {
 public:
  void record(std::function<void()> fn) {
    if (enabled_) steps_.push_back(std::move(fn));
  }

  bool grad_enabled() const { return enabled_; }
  void set_grad_enabled(bool on) { enabled_ = on; }

  size_t size() const { return steps_.size(); }

  void reset() {
    steps_.clear();
    consumed_ = false;
  }

  // Seeds d(loss)/d(loss) = 1 and runs the recorded steps in reverse.
  // loss must be scalar; calling twice without reset() is an error because the
  // steps accumulate into grads and a second pass would double-count.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> steps_;
  bool enabled_ = true;
  bool consumed_ = false;
};

// Scoped grad-off: ops run forward-only and mark outputs requires_grad=false.
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), prev_(tape.grad_enabled()) {
    tape_.set_grad_enabled(false);
  }
  ~NoGradGuard() { tape_.set_grad_enabled(prev_); }

 private:
  Tape& tape_;
  bool prev_;
};

// ---- elementwise / arithmetic ----
Tensor add(Tape& t, const Tensor& a, const Tensor& b);
Tensor sub(Tape& t, const Tensor& a, const Tensor& b);
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);
Tensor scale(Tape& t, const Tensor& a, double s);
Tensor relu(Tape& t, const Tensor& a);
Tensor sigmoid(Tape& t, const Tensor& a);

// ---- linear algebra ----
Tensor matmul(Tape& t, const Tensor& a, const Tensor& b);              // [m,k]x[k,n]
Tensor linear(Tape& t, const Tensor& x, const Tensor& w, const Tensor& b);  // x[b,in], w[out,in]

// ---- convolution ----
// Same padding, stride 1. kernel [c_out, c_in/groups, kh, kw]; bias optional
// (pass nullptr). dil applies to both axes of the receptive field.
Tensor conv2d(Tape& t, const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int dil_h = 1, int dil_w = 1, int groups = 1);

// ---- structural ----
Tensor reshape(Tape& t, const Tensor& a, const Shape& s);          // copy, same numel
Tensor concat_channels(Tape& t, const std::vector<Tensor>& xs);    // along dim 1
Tensor select_channels(Tape& t, const Tensor& x, const std::vector<int>& idx);
// Inverse of a two-way channel split: out[:, idx_a[i]] = a[:, i], same for b.
Tensor assemble_channels(Tape& t, const Tensor& a, const std::vector<int>& idx_a,
                         const Tensor& b, const std::vector<int>& idx_b);
Tensor roll_channels(Tape& t, const Tensor& x, int shift);

// ---- reductions / small vectors ----
Tensor softmax1d(Tape& t, const Tensor& a);  // 1-D input
// sum_i w[i] * xs[i]; w is a 1-D tensor of length xs.size(). Gradients flow
// into both the stacked tensors and the weights.
Tensor weighted_sum(Tape& t, const std::vector<Tensor>& xs, const Tensor& w);
Tensor sum_all(Tape& t, const Tensor& a);                  // scalar
Tensor mse(Tape& t, const Tensor& pred, const Tensor& target);  // mean over elements

}  // namespace csinas
