// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "csinas/gradcheck.hpp"
#include "csinas/optim.hpp"
#include "csinas/rng.hpp"
#include "csinas/tensor.hpp"

using namespace csinas;

namespace {

// Checks that fn throws a runtime_error whose message contains what.
void expect_throw(const std::function<void()>& fn, const std::string& what) {
  try {
    fn();
    FAIL("expected exception containing \"" << what << "\"");
  } catch (const std::runtime_error& e) {
    CHECK_MESSAGE(std::string(e.what()).find(what) != std::string::npos,
                  "message \"" << e.what() << "\" lacks \"" << what << "\"");
  }
}

std::vector<double> values(const Tensor& t) { return t->value; }

}  // namespace

TEST_CASE("tensor constructors and shape validation") {
  Tensor z = tensor_zeros({2, 3});
  CHECK(z->size() == 6);
  CHECK(!z->requires_grad);
  for (double v : z->value) CHECK(v == 0.0);

  Tensor f = tensor_full({4}, 2.5, true);
  CHECK(f->requires_grad);
  for (double v : f->value) CHECK(v == 2.5);

  Tensor x = tensor_from({2, 2}, {1, 2, 3, 4});
  CHECK(x->value == std::vector<double>{1, 2, 3, 4});

  expect_throw([] { tensor_zeros({2, 0}); }, "non-positive dim");
  expect_throw([] { tensor_from({2, 2}, {1, 2, 3}); }, "tensor_from");
}

TEST_CASE("tensor_randn is seed-deterministic with sane moments") {
  Rng r1(42), r2(42);
  Tensor a = tensor_randn({1000}, r1, 0.5);
  Tensor b = tensor_randn({1000}, r2, 0.5);
  CHECK(std::memcmp(a->value.data(), b->value.data(), 1000 * sizeof(double)) == 0);

  double mean = 0.0, var = 0.0;
  for (double v : a->value) mean += v;
  mean /= 1000.0;
  for (double v : a->value) var += (v - mean) * (v - mean);
  var /= 1000.0;
  CHECK(std::abs(mean) < 0.06);
  CHECK(var == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("elementwise forward values") {
  Tape t;
  Tensor a = tensor_from({2, 2}, {1, -2, 3, 0});
  Tensor b = tensor_from({2, 2}, {0.5, 4, -1, 2});

  CHECK(values(add(t, a, b)) == std::vector<double>{1.5, 2, 2, 2});
  CHECK(values(sub(t, a, b)) == std::vector<double>{0.5, -6, 4, -2});
  CHECK(values(mul(t, a, b)) == std::vector<double>{0.5, -8, -3, 0});
  CHECK(values(scale(t, a, -2)) == std::vector<double>{-2, 4, -6, 0});
  CHECK(values(relu(t, a)) == std::vector<double>{1, 0, 3, 0});

  Tensor s = sigmoid(t, tensor_from({3}, {0, 100, -100}));
  CHECK(s->value[0] == doctest::Approx(0.5));
  CHECK(s->value[1] == doctest::Approx(1.0));
  CHECK(s->value[2] == doctest::Approx(0.0));

  expect_throw([&] { add(t, a, tensor_zeros({3})); }, "shape mismatch");
}

TEST_CASE("matmul and linear forward hand values") {
  Tape t;
  Tensor a = tensor_from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = tensor_from({3, 2}, {7, 8, 9, 10, 11, 12});
  CHECK(values(matmul(t, a, b)) == std::vector<double>{58, 64, 139, 154});

  Tensor x = tensor_from({1, 2}, {1, 2});
  Tensor w = tensor_from({2, 2}, {1, 2, 3, 4});
  Tensor bias = tensor_from({2}, {0.5, -1});
  CHECK(values(linear(t, x, w, bias)) == std::vector<double>{5.5, 10});

  expect_throw([&] { matmul(t, a, tensor_zeros({2, 2})); }, "matmul");
  expect_throw([&] { linear(t, x, w, tensor_zeros({3})); }, "linear: bias shape");
}

TEST_CASE("conv2d same padding sums the 3x3 neighborhood") {
  Tape t;
  Tensor x = tensor_from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k = tensor_full({1, 1, 3, 3}, 1.0);
  Tensor y = conv2d(t, x, k, nullptr);
  CHECK(y->shape == Shape{1, 1, 3, 3});
  CHECK(values(y) == std::vector<double>{12, 21, 16, 27, 45, 33, 24, 39, 28});

  Tensor bias = tensor_from({1}, {0.5});
  Tensor yb = conv2d(t, x, k, bias);
  for (int i = 0; i < 9; ++i) CHECK(yb->value[i] == y->value[i] + 0.5);
}

TEST_CASE("conv2d dilation spreads taps and keeps the output size") {
  Tape t;
  std::vector<double> delta(25, 0.0);
  delta[12] = 1.0;  // center of the 5x5 plane
  Tensor x = tensor_from({1, 1, 5, 5}, delta);
  Tensor k = tensor_full({1, 1, 3, 3}, 1.0);
  Tensor y = conv2d(t, x, k, nullptr, 2, 2);
  CHECK(y->shape == Shape{1, 1, 5, 5});
  double sum = 0.0;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      double expect = (r % 2 == 0 && c % 2 == 0) ? 1.0 : 0.0;
      CHECK(y->value[r * 5 + c] == expect);
      sum += y->value[r * 5 + c];
    }
  }
  CHECK(sum == 9.0);
}

TEST_CASE("conv2d depthwise groups keep channels independent") {
  Tape t;
  Tensor x = tensor_from({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor k = tensor_from({2, 1, 1, 1}, {3, 0.5});
  Tensor y = conv2d(t, x, k, nullptr, 1, 1, 2);
  CHECK(values(y) == std::vector<double>{3, 6, 9, 12, 5, 10, 15, 20});

  expect_throw([&] { conv2d(t, x, tensor_zeros({2, 2, 1, 1}), nullptr, 1, 1, 2); },
               "group mismatch");
}

TEST_CASE("conv2d rejects kernels that cannot pad symmetrically") {
  Tape t;
  Tensor x = tensor_zeros({1, 1, 4, 4});
  expect_throw([&] { conv2d(t, x, tensor_zeros({1, 1, 2, 2}), nullptr); },
               "span must be even");
  expect_throw([&] { conv2d(t, x, tensor_zeros({1, 1, 1, 3}), nullptr, 1, 0); },
               "dilation");
}

TEST_CASE("structural ops move channels exactly") {
  Tape t;
  Tensor x = tensor_from({1, 4, 1, 1}, {10, 20, 30, 40});

  CHECK(values(select_channels(t, x, {2, 0})) == std::vector<double>{30, 10});
  expect_throw([&] { select_channels(t, x, {4}); }, "select_channels: index");

  Tensor a = tensor_from({1, 2, 1, 1}, {1, 2});
  Tensor b = tensor_from({1, 2, 1, 1}, {5, 6});
  CHECK(values(assemble_channels(t, a, {1, 3}, b, {0, 2})) ==
        std::vector<double>{5, 1, 6, 2});
  expect_throw([&] { assemble_channels(t, a, {0, 1}, b, {1, 2}); }, "permutation");

  CHECK(values(concat_channels(t, {a, b})) == std::vector<double>{1, 2, 5, 6});
  expect_throw([&] { concat_channels(t, {}); }, "empty input list");

  CHECK(values(roll_channels(t, x, 1)) == std::vector<double>{40, 10, 20, 30});
  CHECK(values(roll_channels(t, x, -1)) == std::vector<double>{20, 30, 40, 10});
  CHECK(values(roll_channels(t, x, 4)) == values(x));

  Tensor r = reshape(t, x, {2, 2});
  CHECK(r->shape == Shape{2, 2});
  CHECK(values(r) == values(x));
  expect_throw([&] { reshape(t, x, {3, 1}); }, "reshape");
}

TEST_CASE("softmax1d normalizes and survives large logits") {
  Tape t;
  Tensor u = softmax1d(t, tensor_zeros({4}));
  for (double v : u->value) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  Tensor s = softmax1d(t, tensor_from({2}, {0.0, std::log(3.0)}));
  CHECK(s->value[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s->value[1] == doctest::Approx(0.75).epsilon(1e-12));

  Tensor big = softmax1d(t, tensor_from({3}, {1000, 1000, 1000}));
  double total = 0.0;
  for (double v : big->value) {
    CHECK(std::isfinite(v));
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(7);
  Tensor r = softmax1d(t, tensor_randn({8}, rng, 3.0));
  double rs = 0.0;
  for (double v : r->value) rs += v;
  CHECK(rs == doctest::Approx(1.0).epsilon(1e-12));

  expect_throw([&] { softmax1d(t, tensor_zeros({2, 2})); }, "1-D input");
}

TEST_CASE("weighted_sum and reductions compute hand values") {
  Tape t;
  std::vector<Tensor> xs = {tensor_from({2}, {1, 2}, true),
                            tensor_from({2}, {3, 4}, true),
                            tensor_from({2}, {5, 6}, true)};
  Tensor w = tensor_from({3}, {0.5, 1, -1}, true);
  Tensor y = weighted_sum(t, xs, w);
  CHECK(values(y) == std::vector<double>{-1.5, -1});

  Tensor loss = sum_all(t, y);
  CHECK(loss->value[0] == doctest::Approx(-2.5));
  t.backward(loss);
  CHECK(w->grad == std::vector<double>{3, 7, 11});
  for (int i = 0; i < 3; ++i) {
    CHECK(xs[i]->grad[0] == doctest::Approx(w->value[i]));
    CHECK(xs[i]->grad[1] == doctest::Approx(w->value[i]));
  }
  t.reset();

  Tensor pred = tensor_from({2}, {1, 2}, true);
  Tensor target = tensor_from({2}, {0, 0});
  Tensor m = mse(t, pred, target);
  CHECK(m->value[0] == doctest::Approx(2.5));
  t.backward(m);
  CHECK(pred->grad[0] == doctest::Approx(1.0));  // 2 * (pred - target) / n
  CHECK(pred->grad[1] == doctest::Approx(2.0));
  t.reset();

  expect_throw([&] { weighted_sum(t, xs, tensor_zeros({2})); }, "weighted_sum");
}

TEST_CASE("tape discipline: scalar-only, single-shot backward, grad gating") {
  Tape t;
  Tensor x = tensor_from({2}, {1, 2}, true);
  Tensor y = mul(t, x, x);
  expect_throw([&] { t.backward(y); }, "must be scalar");
  expect_throw([&] { t.backward(nullptr); }, "null loss");

  Tensor loss = sum_all(t, y);
  t.backward(loss);
  CHECK(x->grad == std::vector<double>{2, 4});
  expect_throw([&] { t.backward(loss); }, "already consumed");
  t.reset();

  // Without requires_grad nothing is recorded.
  Tape clean;
  Tensor a = tensor_from({2}, {1, 2});
  sum_all(clean, mul(clean, a, a));
  CHECK(clean.size() == 0);

  // NoGradGuard suppresses recording and marks outputs grad-free.
  Tape guarded;
  Tensor p = tensor_from({2}, {1, 2}, true);
  {
    NoGradGuard ng(guarded);
    Tensor q = mul(guarded, p, p);
    CHECK(!q->requires_grad);
    CHECK(guarded.size() == 0);
  }
  CHECK(guarded.grad_enabled());
}

TEST_CASE("backward accumulates grads additively across passes") {
  Tensor x = tensor_from({2}, {3, -1}, true);
  auto run = [&] {
    Tape t;
    Tensor loss = sum_all(t, mul(t, x, x));
    t.backward(loss);
  };
  run();
  std::vector<double> g1 = x->grad;  // 2x
  run();
  for (int i = 0; i < 2; ++i) CHECK(x->grad[i] == doctest::Approx(2 * g1[i]));
  x->zero_grad();
  for (double g : x->grad) CHECK(g == 0.0);
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(3);
  Tensor x = tensor_randn({3, 4}, rng, 1.0, true);
  Tensor t1 = tensor_randn({3, 4}, rng, 1.0);
  Tensor t2 = tensor_randn({3, 4}, rng, 1.0);
  const double alpha = 0.37;

  auto grads_of = [&](const std::function<Tensor(Tape&)>& build) {
    Tape t;
    x->grad.clear();
    Tensor loss = build(t);
    t.backward(loss);
    return x->grad;
  };

  std::vector<double> g1 = grads_of([&](Tape& t) { return mse(t, sigmoid(t, x), t1); });
  std::vector<double> g2 = grads_of([&](Tape& t) { return mse(t, x, t2); });
  std::vector<double> gc = grads_of([&](Tape& t) {
    return add(t, mse(t, sigmoid(t, x), t1), scale(t, mse(t, x, t2), alpha));
  });
  for (size_t i = 0; i < gc.size(); ++i) {
    CHECK(gc[i] == doctest::Approx(g1[i] + alpha * g2[i]).epsilon(1e-10));
  }
}

TEST_CASE("gradient check: smooth elementwise composite") {
  Rng rng(11);
  Tensor x = tensor_randn({2, 3}, rng, 1.0, true);
  Tensor y = tensor_randn({2, 3}, rng, 1.0, true);
  Tensor target = tensor_randn({2, 3}, rng, 1.0);
  auto build = [&](Tape& t) {
    Tensor z = mul(t, add(t, x, y), sub(t, x, scale(t, y, 0.5)));
    return mse(t, sigmoid(t, z), target);
  };
  CHECK(grad_check_fn(build, {x, y}, 1e-5) < 1e-6);
}

TEST_CASE("gradient check: relu away from the kink") {
  Tensor x = tensor_from({5}, {1.5, -2.0, 0.75, -0.5, 3.0}, true);
  Tensor c = tensor_from({5}, {0.3, -1.2, 2.0, 0.7, -0.4});
  auto build = [&](Tape& t) { return sum_all(t, mul(t, relu(t, x), c)); };
  CHECK(grad_check_fn(build, {x}, 1e-5) < 1e-6);
}

TEST_CASE("gradient check: linear and matmul") {
  Rng rng(17);
  Tensor x = tensor_randn({3, 4}, rng, 1.0, true);
  Tensor w = tensor_randn({2, 4}, rng, 0.5, true);
  Tensor b = tensor_randn({2}, rng, 0.5, true);
  Tensor tgt = tensor_randn({3, 2}, rng, 1.0);
  auto build = [&](Tape& t) { return mse(t, linear(t, x, w, b), tgt); };
  CHECK(grad_check_fn(build, {x, w, b}, 1e-5) < 1e-6);

  Tensor a = tensor_randn({2, 3}, rng, 1.0, true);
  Tensor m = tensor_randn({3, 2}, rng, 1.0, true);
  Tensor tgt2 = tensor_randn({2, 2}, rng, 1.0);
  auto build2 = [&](Tape& t) { return mse(t, matmul(t, a, m), tgt2); };
  CHECK(grad_check_fn(build2, {a, m}, 1e-5) < 1e-6);
}

TEST_CASE("gradient check: conv2d plain, dilated, grouped") {
  Rng rng(23);
  Tensor x = tensor_randn({2, 3, 5, 4}, rng, 1.0, true);
  Tensor k = tensor_randn({2, 3, 3, 3}, rng, 0.4, true);
  Tensor b = tensor_randn({2}, rng, 0.2, true);
  Tensor tgt = tensor_randn({2, 2, 5, 4}, rng, 1.0);
  auto build = [&](Tape& t) { return mse(t, conv2d(t, x, k, b), tgt); };
  CHECK(grad_check_fn(build, {x, k, b}, 1e-5) < 1e-6);

  Tensor xd = tensor_randn({1, 2, 5, 5}, rng, 1.0, true);
  Tensor kd = tensor_randn({2, 2, 3, 3}, rng, 0.4, true);
  Tensor tgtd = tensor_randn({1, 2, 5, 5}, rng, 1.0);
  auto buildd = [&](Tape& t) {
    return mse(t, conv2d(t, xd, kd, nullptr, 2, 2), tgtd);
  };
  CHECK(grad_check_fn(buildd, {xd, kd}, 1e-5) < 1e-6);

  Tensor xg = tensor_randn({2, 4, 3, 3}, rng, 1.0, true);
  Tensor kg = tensor_randn({4, 1, 3, 3}, rng, 0.4, true);
  Tensor bg = tensor_randn({4}, rng, 0.2, true);
  Tensor tgtg = tensor_randn({2, 4, 3, 3}, rng, 1.0);
  auto buildg = [&](Tape& t) {
    return mse(t, conv2d(t, xg, kg, bg, 1, 1, 4), tgtg);
  };
  CHECK(grad_check_fn(buildg, {xg, kg, bg}, 1e-5) < 1e-6);
}

TEST_CASE("gradient check: channel select, roll, assemble, softmax mixture") {
  Rng rng(29);
  Tensor x = tensor_randn({2, 4, 3, 3}, rng, 1.0, true);
  Tensor logits = tensor_randn({3}, rng, 1.0, true);
  Tensor tgt = tensor_randn({2, 4, 3, 3}, rng, 1.0);
  auto build = [&](Tape& t) {
    Tensor active = select_channels(t, x, {0, 2});
    Tensor passive = select_channels(t, x, {1, 3});
    Tensor w = softmax1d(t, logits);
    Tensor mixed = weighted_sum(
        t, {active, scale(t, active, -1.0), sigmoid(t, active)}, w);
    Tensor whole = assemble_channels(t, mixed, {0, 2}, passive, {1, 3});
    return mse(t, roll_channels(t, whole, 2), tgt);
  };
  CHECK(grad_check_fn(build, {x, logits}, 1e-5) < 1e-6);
}

TEST_CASE("Adam takes the bias-corrected step") {
  Tensor p = tensor_from({1}, {0.5}, true);
  Adam opt({p}, {0.1, 0.9, 0.999, 1e-8, 1.0});

  p->ensure_grad();
  p->grad[0] = 2.0;
  opt.step();
  // m_hat = g, v_hat = g^2, so the first step is lr * g / (|g| + eps).
  CHECK(p->value[0] == doctest::Approx(0.4).epsilon(1e-8));

  opt.zero_grad();
  CHECK(p->grad[0] == 0.0);
  p->grad[0] = 2.0;
  opt.step();
  CHECK(p->value[0] == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(opt.steps_taken() == 2);
}

TEST_CASE("Adam lr schedule decays per epoch") {
  Tensor p = tensor_from({1}, {0.0}, true);
  Adam opt({p}, {0.1, 0.9, 0.999, 1e-8, 0.5});
  CHECK(opt.current_lr() == doctest::Approx(0.1));
  opt.set_epoch(3);
  CHECK(opt.current_lr() == doctest::Approx(0.0125));
  opt.set_epoch(0);
  CHECK(opt.current_lr() == doctest::Approx(0.1));
}

TEST_CASE("Adam converges on a convex quadratic") {
  Tensor p = tensor_from({2}, {3.0, -2.0}, true);
  Tensor target = tensor_from({2}, {1.0, 0.5});
  Adam opt({p}, {0.05, 0.9, 0.999, 1e-8, 1.0});
  for (int i = 0; i < 400; ++i) {
    Tape t;
    Tensor loss = mse(t, p, target);
    opt.zero_grad();
    t.backward(loss);
    opt.step();
  }
  CHECK(p->value[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p->value[1] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("training loop is bitwise deterministic") {
  auto run = [] {
    Rng rng(99);
    Tensor w = tensor_randn({2, 4}, rng, 0.5, true);
    Tensor b = tensor_zeros({2}, true);
    Tensor x = tensor_randn({8, 4}, rng, 1.0);
    Tensor y = tensor_randn({8, 2}, rng, 1.0);
    Adam opt({w, b}, {1e-2, 0.9, 0.999, 1e-8, 0.99});
    double last = 0.0;
    for (int e = 0; e < 30; ++e) {
      opt.set_epoch(e);
      Tape t;
      Tensor loss = mse(t, linear(t, x, w, b), y);
      opt.zero_grad();
      t.backward(loss);
      opt.step();
      last = loss->value[0];
    }
    std::vector<double> out = w->value;
    out.insert(out.end(), b->value.begin(), b->value.end());
    out.push_back(last);
    return out;
  };
  std::vector<double> a = run(), b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}
