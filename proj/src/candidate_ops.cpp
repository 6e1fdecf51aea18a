// SPDX-License-Identifier: Apache-2.0
#include "csinas/candidate_ops.hpp"

#include <cmath>
#include <stdexcept>

#include "csinas/gradcheck.hpp"

namespace csinas {

namespace {

const char* kOpNames[kNumOpKinds] = {
    "zero",        "skip_connection", "sep_conv3x3",  "dil_conv3x3",
    "dil_conv5x5", "conv3x3",         "conv1x5_5x1",  "conv1x9_9x1",
};

Tensor he_conv(const Shape& s, Rng& rng) {
  // fan-in = cin_per_group * kh * kw
  double fan_in = static_cast<double>(s[1]) * s[2] * s[3];
  return tensor_randn(s, rng, std::sqrt(2.0 / fan_in), /*requires_grad=*/true);
}

Tensor zero_bias(int c) { return tensor_zeros({c}, /*requires_grad=*/true); }

}  // namespace

const char* op_name(OpKind k) {
  int i = static_cast<int>(k);
  if (i < 0 || i >= kNumOpKinds) throw std::runtime_error("op_name: invalid op kind");
  return kOpNames[i];
}

std::optional<OpKind> op_from_name(const std::string& name) {
  for (int i = 0; i < kNumOpKinds; ++i) {
    if (name == kOpNames[i]) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

std::vector<OpKind> all_op_kinds() {
  std::vector<OpKind> v;
  for (int i = 0; i < kNumOpKinds; ++i) v.push_back(static_cast<OpKind>(i));
  return v;
}

bool op_has_params(OpKind k) { return k != OpKind::zero && k != OpKind::skip_connection; }

OperatorInstance OperatorInstance::create(OpKind kind, int channels, Rng& rng, OpOptions opts) {
  if (channels < 1) throw std::runtime_error("OperatorInstance: channels must be >= 1");
  OperatorInstance op(kind, channels, opts);
  const int c = channels;
  switch (kind) {
    case OpKind::zero:
    case OpKind::skip_connection:
      break;
    case OpKind::sep_conv3x3:
      op.params_ = {he_conv({c, 1, 3, 3}, rng), he_conv({c, c, 1, 1}, rng), zero_bias(c)};
      break;
    case OpKind::dil_conv3x3:
      op.params_ = {he_conv({c, 1, 3, 3}, rng), he_conv({c, c, 1, 1}, rng), zero_bias(c)};
      break;
    case OpKind::dil_conv5x5:
      op.params_ = {he_conv({c, 1, 5, 5}, rng), he_conv({c, c, 1, 1}, rng), zero_bias(c)};
      break;
    case OpKind::conv3x3:
      op.params_ = {he_conv({c, c, 3, 3}, rng), zero_bias(c)};
      break;
    case OpKind::conv1x5_5x1:
      op.params_ = {he_conv({c, c, 1, 5}, rng), zero_bias(c), he_conv({c, c, 5, 1}, rng),
                    zero_bias(c)};
      break;
    case OpKind::conv1x9_9x1:
      op.params_ = {he_conv({c, c, 1, 9}, rng), zero_bias(c), he_conv({c, c, 9, 1}, rng),
                    zero_bias(c)};
      break;
  }
  return op;
}

Tensor OperatorInstance::apply_preactivation(Tape& tape, const Tensor& x) const {
  if (x->shape.size() != 4 || x->shape[1] != channels_) {
    throw std::runtime_error(std::string("apply(") + op_name(kind_) + "): input " +
                             shape_str(x->shape) + " does not carry " +
                             std::to_string(channels_) + " channels");
  }
  switch (kind_) {
    case OpKind::zero:
      return tensor_zeros(x->shape, false);
    case OpKind::skip_connection:
      return x;
    case OpKind::sep_conv3x3: {
      Tensor dw = conv2d(tape, x, params_[0], nullptr, 1, 1, channels_);
      return conv2d(tape, dw, params_[1], params_[2]);
    }
    case OpKind::dil_conv3x3: {
      Tensor dw = conv2d(tape, x, params_[0], nullptr, 2, 2, channels_);
      return conv2d(tape, dw, params_[1], params_[2]);
    }
    case OpKind::dil_conv5x5: {
      Tensor dw = conv2d(tape, x, params_[0], nullptr, 2, 2, channels_);
      return conv2d(tape, dw, params_[1], params_[2]);
    }
    case OpKind::conv3x3:
      return conv2d(tape, x, params_[0], params_[1]);
    case OpKind::conv1x5_5x1: {
      Tensor mid = conv2d(tape, x, params_[0], params_[1]);
      return conv2d(tape, mid, params_[2], params_[3]);
    }
    case OpKind::conv1x9_9x1: {
      Tensor mid = conv2d(tape, x, params_[0], params_[1]);
      return conv2d(tape, mid, params_[2], params_[3]);
    }
  }
  throw std::runtime_error("apply: invalid op kind");
}

Tensor OperatorInstance::apply(Tape& tape, const Tensor& x) const {
  Tensor y = apply_preactivation(tape, x);
  if (opts_.post_relu && op_has_params(kind_)) y = relu(tape, y);
  return y;
}

int64_t op_flops(OpKind kind, int c, int h, int w) {
  if (c < 1 || h < 1 || w < 1) throw std::runtime_error("op_flops: non-positive dims");
  const int64_t cc = static_cast<int64_t>(c);
  const int64_t hw = static_cast<int64_t>(h) * w;
  switch (kind) {
    case OpKind::zero:
    case OpKind::skip_connection:
      return 0;
    case OpKind::sep_conv3x3:
    case OpKind::dil_conv3x3:
      return (2 * 9 * cc + 2 * cc * cc) * hw;  // depthwise 3x3 + pointwise
    case OpKind::dil_conv5x5:
      return (2 * 25 * cc + 2 * cc * cc) * hw;
    case OpKind::conv3x3:
      return 2 * 9 * cc * cc * hw;
    case OpKind::conv1x5_5x1:
      return 2 * (5 + 5) * cc * cc * hw;
    case OpKind::conv1x9_9x1:
      return 2 * (9 + 9) * cc * cc * hw;
  }
  throw std::runtime_error("op_flops: invalid op kind");
}

int64_t op_param_count(OpKind kind, int c) {
  const int64_t cc = static_cast<int64_t>(c);
  switch (kind) {
    case OpKind::zero:
    case OpKind::skip_connection:
      return 0;
    case OpKind::sep_conv3x3:
    case OpKind::dil_conv3x3:
      return 9 * cc + cc * cc + cc;  // depthwise (no bias) + pointwise + bias
    case OpKind::dil_conv5x5:
      return 25 * cc + cc * cc + cc;
    case OpKind::conv3x3:
      return 9 * cc * cc + cc;
    case OpKind::conv1x5_5x1:
      return (5 + 5) * cc * cc + 2 * cc;
    case OpKind::conv1x9_9x1:
      return (9 + 9) * cc * cc + 2 * cc;
  }
  throw std::runtime_error("op_param_count: invalid op kind");
}

double grad_check(OpKind kind, const std::vector<Shape>& trial_shapes, double epsilon,
                  uint64_t seed) {
  double worst = 0.0;
  for (size_t t = 0; t < trial_shapes.size(); ++t) {
    const Shape& xs = trial_shapes[t];
    if (xs.size() != 4) throw std::runtime_error("grad_check: trial shape must be 4-D");
    for (int attempt = 0; attempt < 64; ++attempt) {
      Rng rng(mix_seed(seed, mix_seed(t, static_cast<uint64_t>(attempt))));
      OperatorInstance op = OperatorInstance::create(kind, xs[1], rng);
      Tensor x = tensor_randn(xs, rng, 1.0, /*requires_grad=*/true);
      Tensor coef = tensor_randn(xs, rng, 1.0, /*requires_grad=*/false);

      // Reject draws whose pre-activations graze the ReLU kink: central
      // differences would straddle the non-smooth point there.
      if (op_has_params(kind)) {
        Tape probe;
        NoGradGuard off(probe);
        Tensor pre = op.apply_preactivation(probe, x);
        bool near_kink = false;
        for (double v : pre->value) {
          if (std::abs(v) < 1e-3) {
            near_kink = true;
            break;
          }
        }
        if (near_kink) continue;
      }

      std::vector<Tensor> params = op.params();
      params.push_back(x);
      auto build = [&](Tape& tape) {
        Tensor y = op.apply(tape, x);
        return sum_all(tape, mul(tape, y, coef));
      };
      worst = std::max(worst, grad_check_fn(build, params, epsilon));
      break;
    }
  }
  return worst;
}

}  // namespace csinas
