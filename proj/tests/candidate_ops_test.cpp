// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "csinas/candidate_ops.hpp"
#include "csinas/rng.hpp"
#include "csinas/tensor.hpp"

using namespace csinas;

TEST_CASE("op vocabulary names round-trip in declaration order") {
  std::vector<OpKind> kinds = all_op_kinds();
  REQUIRE(kinds.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(static_cast<int>(kinds[i]) == i);
    CHECK(op_from_name(op_name(kinds[i])) == kinds[i]);
  }
  CHECK(std::string(op_name(OpKind::zero)) == "zero");
  CHECK(std::string(op_name(OpKind::skip_connection)) == "skip_connection");
  CHECK(std::string(op_name(OpKind::conv1x9_9x1)) == "conv1x9_9x1");
  CHECK(!op_from_name("conv7x7").has_value());
  CHECK(!op_from_name("").has_value());

  CHECK(!op_has_params(OpKind::zero));
  CHECK(!op_has_params(OpKind::skip_connection));
  for (int i = 2; i < 8; ++i) CHECK(op_has_params(static_cast<OpKind>(i)));
}

TEST_CASE("FLOPs and params match hand counts at width 7 on 32x32") {
  // Doubled multiply-accumulates, full same-padding output, depthwise stages
  // carry no bias, factorized pairs carry one bias per stage.
  const int c = 7, h = 32, w = 32;
  CHECK(op_flops(OpKind::zero, c, h, w) == 0);
  CHECK(op_flops(OpKind::skip_connection, c, h, w) == 0);
  CHECK(op_flops(OpKind::conv3x3, c, h, w) == 903168);      // 2*9*49*1024
  CHECK(op_flops(OpKind::conv1x5_5x1, c, h, w) == 1003520); // 2*10*49*1024
  CHECK(op_flops(OpKind::conv1x9_9x1, c, h, w) == 1806336); // 2*18*49*1024
  CHECK(op_flops(OpKind::sep_conv3x3, c, h, w) == 229376);  // 2*(9*7+49)*1024
  CHECK(op_flops(OpKind::dil_conv3x3, c, h, w) == 229376);  // dilation keeps MACs
  CHECK(op_flops(OpKind::dil_conv5x5, c, h, w) == 458752);  // 2*(25*7+49)*1024

  CHECK(op_param_count(OpKind::zero, c) == 0);
  CHECK(op_param_count(OpKind::skip_connection, c) == 0);
  CHECK(op_param_count(OpKind::conv3x3, c) == 448);      // 9*49+7
  CHECK(op_param_count(OpKind::conv1x5_5x1, c) == 504);  // 2*(5*49+7)
  CHECK(op_param_count(OpKind::conv1x9_9x1, c) == 896);  // 2*(9*49+7)
  CHECK(op_param_count(OpKind::sep_conv3x3, c) == 119);  // 9*7+49+7
  CHECK(op_param_count(OpKind::dil_conv3x3, c) == 119);
  CHECK(op_param_count(OpKind::dil_conv5x5, c) == 231);  // 25*7+49+7

  // Minimal case: one channel, one pixel.
  CHECK(op_flops(OpKind::conv3x3, 1, 1, 1) == 18);
  CHECK(op_param_count(OpKind::conv3x3, 1) == 10);
  CHECK_THROWS_AS(op_flops(OpKind::conv3x3, 0, 4, 4), std::runtime_error);
}

TEST_CASE("FLOPs and params grow with width for parametric ops") {
  for (int i = 2; i < 8; ++i) {
    OpKind k = static_cast<OpKind>(i);
    CHECK(op_flops(k, 4, 8, 8) < op_flops(k, 8, 8, 8));
    CHECK(op_param_count(k, 4) < op_param_count(k, 8));
    // FLOPs scale linearly with the pixel count.
    CHECK(op_flops(k, 4, 16, 16) == 4 * op_flops(k, 4, 8, 8));
  }
}

TEST_CASE("instance parameter elements sum to the accounted count") {
  Rng rng(5);
  for (OpKind k : all_op_kinds()) {
    OperatorInstance op = OperatorInstance::create(k, 6, rng);
    int64_t total = 0;
    for (const Tensor& p : op.params()) total += p->size();
    CHECK(total == op_param_count(k, 6));
    CHECK(op.kind() == k);
    CHECK(op.channels() == 6);
  }
  // Depthwise stages are per-channel kernels.
  Rng r2(5);
  OperatorInstance sep = OperatorInstance::create(OpKind::sep_conv3x3, 6, r2);
  CHECK(sep.params()[0]->shape == Shape{6, 1, 3, 3});
  CHECK(sep.params()[1]->shape == Shape{6, 6, 1, 1});
}

TEST_CASE("zero annihilates and skip is exact identity") {
  Rng rng(9);
  Tape tape;
  Tensor x = tensor_randn({2, 5, 4, 3}, rng, 1.0, true);

  OperatorInstance z = OperatorInstance::create(OpKind::zero, 5, rng);
  Tensor zy = z.apply(tape, x);
  CHECK(zy->shape == x->shape);
  for (double v : zy->value) CHECK(v == 0.0);

  OperatorInstance s = OperatorInstance::create(OpKind::skip_connection, 5, rng);
  Tensor sy = s.apply(tape, x);
  CHECK(std::memcmp(sy->value.data(), x->value.data(),
                    x->value.size() * sizeof(double)) == 0);
}

TEST_CASE("parametric ops preserve shape and activate when asked") {
  Rng rng(13);
  for (int i = 2; i < 8; ++i) {
    OpKind k = static_cast<OpKind>(i);
    OperatorInstance op = OperatorInstance::create(k, 4, rng);
    Tape tape;
    Tensor x = tensor_randn({2, 4, 6, 5}, rng, 1.0);
    Tensor pre = op.apply_preactivation(tape, x);
    Tensor post = op.apply(tape, x);
    CHECK(pre->shape == x->shape);
    CHECK(post->shape == x->shape);
    for (size_t j = 0; j < post->value.size(); ++j) {
      CHECK(post->value[j] == std::max(pre->value[j], 0.0));
    }
    CHECK_THROWS_AS(op.apply(tape, tensor_zeros({2, 3, 6, 5})), std::runtime_error);
  }

  OpOptions no_relu;
  no_relu.post_relu = false;
  Rng r2(13);
  OperatorInstance raw = OperatorInstance::create(OpKind::conv3x3, 4, r2, no_relu);
  Tape tape;
  Tensor x = tensor_randn({1, 4, 5, 5}, r2, 1.0);
  Tensor pre = raw.apply_preactivation(tape, x);
  Tensor post = raw.apply(tape, x);
  CHECK(std::memcmp(pre->value.data(), post->value.data(),
                    pre->value.size() * sizeof(double)) == 0);
}

TEST_CASE("instance creation is seed-deterministic") {
  Rng a(77), b(77);
  OperatorInstance oa = OperatorInstance::create(OpKind::conv1x5_5x1, 5, a);
  OperatorInstance ob = OperatorInstance::create(OpKind::conv1x5_5x1, 5, b);
  REQUIRE(oa.params().size() == ob.params().size());
  for (size_t i = 0; i < oa.params().size(); ++i) {
    CHECK(std::memcmp(oa.params()[i]->value.data(), ob.params()[i]->value.data(),
                      oa.params()[i]->value.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("every candidate op passes the gradient check") {
  std::vector<Shape> shapes = {{1, 3, 4, 4}, {2, 3, 5, 3}};
  for (OpKind k : all_op_kinds()) {
    double err = grad_check(k, shapes, 1e-5, 3);
    CHECK_MESSAGE(err < 1e-4, op_name(k) << " grad error " << err);
  }
}
