// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csinas/rng.hpp"
#include "csinas/tensor.hpp"

namespace csinas {

// The searchable operator vocabulary. Order is load-bearing: argmax tie-breaks
// take the lower index and genotype files serialize these names.
enum class OpKind : int {
  zero = 0,
  skip_connection = 1,
  sep_conv3x3 = 2,
  dil_conv3x3 = 3,
  dil_conv5x5 = 4,
  conv3x3 = 5,
  conv1x5_5x1 = 6,
  conv1x9_9x1 = 7,
};

constexpr int kNumOpKinds = 8;

const char* op_name(OpKind k);
std::optional<OpKind> op_from_name(const std::string& name);
std::vector<OpKind> all_op_kinds();

bool op_has_params(OpKind k);

struct OpOptions {
  // Trailing ReLU on parametric operators (zero/skip never activate).
  bool post_relu = true;
};

// One operator with its own parameters at a fixed channel width. Spatial size
// is preserved by every kind (stride 1, same padding).
class OperatorInstance {
 public:
  static OperatorInstance create(OpKind kind, int channels, Rng& rng, OpOptions opts = {});

  Tensor apply(Tape& tape, const Tensor& x) const;
  // Same computation without the trailing activation; grad checks use this to
  // steer trials away from ReLU kinks.
  Tensor apply_preactivation(Tape& tape, const Tensor& x) const;

  OpKind kind() const { return kind_; }
  int channels() const { return channels_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  OperatorInstance(OpKind k, int c, OpOptions o) : kind_(k), channels_(c), opts_(o) {}

  OpKind kind_;
  int channels_;
  OpOptions opts_;
  std::vector<Tensor> params_;
};

// FLOPs under the 2*MACs convention, full same-padding count; zero/skip are free.
int64_t op_flops(OpKind kind, int c, int h, int w);
// Exact parameter count including biases (depthwise stages carry no bias).
int64_t op_param_count(OpKind kind, int c);

// Central-difference check of one op kind over a list of input shapes
// [b, c, h, w]; returns the max relative gradient error observed. Trials are
// re-drawn when a pre-activation value sits within 1e-3 of a ReLU kink.
double grad_check(OpKind kind, const std::vector<Shape>& trial_shapes, double epsilon,
                  uint64_t seed = 1);

}  // namespace csinas
