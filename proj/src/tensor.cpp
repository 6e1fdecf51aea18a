// SPDX-License-Identifier: Apache-2.0
#include "csinas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csinas {

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw std::runtime_error("numel: non-positive dim in " + shape_str(s));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor tensor_zeros(const Shape& s, bool requires_grad) {
  auto t = std::make_shared<TensorNode>();
  t->shape = s;
  t->value.assign(static_cast<size_t>(numel(s)), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

Tensor tensor_full(const Shape& s, double v, bool requires_grad) {
  auto t = tensor_zeros(s, requires_grad);
  std::fill(t->value.begin(), t->value.end(), v);
  return t;
}

Tensor tensor_from(const Shape& s, std::vector<double> data, bool requires_grad) {
  if (static_cast<int64_t>(data.size()) != numel(s)) {
    throw std::runtime_error("tensor_from: data size " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(s));
  }
  auto t = std::make_shared<TensorNode>();
  t->shape = s;
  t->value = std::move(data);
  t->requires_grad = requires_grad;
  return t;
}

Tensor tensor_randn(const Shape& s, Rng& rng, double stddev, bool requires_grad) {
  auto t = tensor_zeros(s, requires_grad);
  for (auto& v : t->value) v = rng.gaussian() * stddev;
  return t;
}

void Tape::backward(const Tensor& loss) {
  if (!loss) throw std::runtime_error("backward: null loss");
  if (loss->size() != 1) {
    throw std::runtime_error("backward: loss must be scalar, got shape " + shape_str(loss->shape));
  }
  if (consumed_) {
    throw std::runtime_error("backward: tape already consumed; reset() before the next pass");
  }
  consumed_ = true;
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (size_t i = steps_.size(); i-- > 0;) steps_[i]();
}

namespace {

bool track(const Tape& t, std::initializer_list<const Tensor*> inputs) {
  if (!t.grad_enabled()) return false;
  for (const Tensor* p : inputs) {
    if (*p && (*p)->requires_grad) return true;
  }
  return false;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a->shape != b->shape) {
    throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                             shape_str(b->shape));
  }
}

Tensor out_like(const Tensor& a, bool requires_grad) {
  auto y = std::make_shared<TensorNode>();
  y->shape = a->shape;
  y->value.resize(a->value.size());
  y->requires_grad = requires_grad;
  return y;
}

}  // namespace

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  bool tr = track(t, {&a, &b});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = a->value[i] + b->value[i];
  if (tr) {
    t.record([a, b, y] {
      y->ensure_grad();
      const int64_t m = y->size();
      if (a->requires_grad) {
        a->ensure_grad();
        for (int64_t i = 0; i < m; ++i) a->grad[i] += y->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < m; ++i) b->grad[i] += y->grad[i];
      }
    });
  }
  return y;
}

Tensor sub(Tape& t, const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  bool tr = track(t, {&a, &b});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = a->value[i] - b->value[i];
  if (tr) {
    t.record([a, b, y] {
      y->ensure_grad();
      const int64_t m = y->size();
      if (a->requires_grad) {
        a->ensure_grad();
        for (int64_t i = 0; i < m; ++i) a->grad[i] += y->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < m; ++i) b->grad[i] -= y->grad[i];
      }
    });
  }
  return y;
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  bool tr = track(t, {&a, &b});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = a->value[i] * b->value[i];
  if (tr) {
    t.record([a, b, y] {
      y->ensure_grad();
      const int64_t m = y->size();
      if (a->requires_grad) {
        a->ensure_grad();
        for (int64_t i = 0; i < m; ++i) a->grad[i] += y->grad[i] * b->value[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < m; ++i) b->grad[i] += y->grad[i] * a->value[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& t, const Tensor& a, double s) {
  bool tr = track(t, {&a});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = a->value[i] * s;
  if (tr) {
    t.record([a, y, s] {
      y->ensure_grad();
      a->ensure_grad();
      const int64_t m = y->size();
      for (int64_t i = 0; i < m; ++i) a->grad[i] += y->grad[i] * s;
    });
  }
  return y;
}

Tensor relu(Tape& t, const Tensor& a) {
  bool tr = track(t, {&a});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = a->value[i] > 0.0 ? a->value[i] : 0.0;
  if (tr) {
    t.record([a, y] {
      y->ensure_grad();
      a->ensure_grad();
      const int64_t m = y->size();
      for (int64_t i = 0; i < m; ++i) {
        if (y->value[i] > 0.0) a->grad[i] += y->grad[i];
      }
    });
  }
  return y;
}

Tensor sigmoid(Tape& t, const Tensor& a) {
  bool tr = track(t, {&a});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  for (int64_t i = 0; i < n; ++i) y->value[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
  if (tr) {
    t.record([a, y] {
      y->ensure_grad();
      a->ensure_grad();
      const int64_t m = y->size();
      for (int64_t i = 0; i < m; ++i) {
        a->grad[i] += y->grad[i] * y->value[i] * (1.0 - y->value[i]);
      }
    });
  }
  return y;
}

Tensor reshape(Tape& t, const Tensor& a, const Shape& s) {
  if (numel(s) != a->size()) {
    throw std::runtime_error("reshape: cannot view " + shape_str(a->shape) + " as " + shape_str(s));
  }
  bool tr = track(t, {&a});
  auto y = std::make_shared<TensorNode>();
  y->shape = s;
  y->value = a->value;
  y->requires_grad = tr;
  if (tr) {
    t.record([a, y] {
      y->ensure_grad();
      a->ensure_grad();
      const int64_t m = y->size();
      for (int64_t i = 0; i < m; ++i) a->grad[i] += y->grad[i];
    });
  }
  return y;
}

namespace {

// Channel-indexed views all share this layout math: [b, c, rest...].
struct ChannelView {
  int64_t batch, channels, inner;
};

ChannelView channel_view(const char* op, const Tensor& x) {
  if (x->shape.size() < 2) {
    throw std::runtime_error(std::string(op) + ": need at least 2 dims, got " +
                             shape_str(x->shape));
  }
  ChannelView v;
  v.batch = x->shape[0];
  v.channels = x->shape[1];
  v.inner = 1;
  for (size_t i = 2; i < x->shape.size(); ++i) v.inner *= x->shape[i];
  return v;
}

}  // namespace

Tensor concat_channels(Tape& t, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::runtime_error("concat_channels: empty input list");
  ChannelView v0 = channel_view("concat_channels", xs[0]);
  int64_t total_c = 0;
  bool tr = false;
  for (const auto& x : xs) {
    ChannelView v = channel_view("concat_channels", x);
    if (v.batch != v0.batch || v.inner != v0.inner || x->shape.size() != xs[0]->shape.size()) {
      throw std::runtime_error("concat_channels: incompatible shapes " + shape_str(xs[0]->shape) +
                               " vs " + shape_str(x->shape));
    }
    total_c += v.channels;
    tr = tr || (t.grad_enabled() && x->requires_grad);
  }
  Shape out_shape = xs[0]->shape;
  out_shape[1] = static_cast<int>(total_c);
  Tensor y = tensor_zeros(out_shape, tr);
  int64_t off = 0;
  for (const auto& x : xs) {
    ChannelView v = channel_view("concat_channels", x);
    for (int64_t b = 0; b < v.batch; ++b) {
      std::copy_n(x->value.data() + b * v.channels * v.inner, v.channels * v.inner,
                  y->value.data() + (b * total_c + off) * v.inner);
    }
    off += v.channels;
  }
  if (tr) {
    t.record([xs, y, total_c] {
      y->ensure_grad();
      int64_t off2 = 0;
      for (const auto& x : xs) {
        ChannelView v = channel_view("concat_channels", x);
        if (x->requires_grad) {
          x->ensure_grad();
          for (int64_t b = 0; b < v.batch; ++b) {
            const double* g = y->grad.data() + (b * total_c + off2) * v.inner;
            double* dst = x->grad.data() + b * v.channels * v.inner;
            for (int64_t i = 0; i < v.channels * v.inner; ++i) dst[i] += g[i];
          }
        }
        off2 += v.channels;
      }
    });
  }
  return y;
}

Tensor select_channels(Tape& t, const Tensor& x, const std::vector<int>& idx) {
  ChannelView v = channel_view("select_channels", x);
  for (int c : idx) {
    if (c < 0 || c >= v.channels) {
      throw std::runtime_error("select_channels: index " + std::to_string(c) +
                               " out of range for " + shape_str(x->shape));
    }
  }
  bool tr = track(t, {&x});
  Shape out_shape = x->shape;
  out_shape[1] = static_cast<int>(idx.size());
  Tensor y = tensor_zeros(out_shape, tr);
  const int64_t k = static_cast<int64_t>(idx.size());
  for (int64_t b = 0; b < v.batch; ++b) {
    for (int64_t i = 0; i < k; ++i) {
      std::copy_n(x->value.data() + (b * v.channels + idx[i]) * v.inner, v.inner,
                  y->value.data() + (b * k + i) * v.inner);
    }
  }
  if (tr) {
    t.record([x, y, idx, v, k] {
      y->ensure_grad();
      x->ensure_grad();
      for (int64_t b = 0; b < v.batch; ++b) {
        for (int64_t i = 0; i < k; ++i) {
          const double* g = y->grad.data() + (b * k + i) * v.inner;
          double* dst = x->grad.data() + (b * v.channels + idx[i]) * v.inner;
          for (int64_t j = 0; j < v.inner; ++j) dst[j] += g[j];
        }
      }
    });
  }
  return y;
}

Tensor assemble_channels(Tape& t, const Tensor& a, const std::vector<int>& idx_a, const Tensor& b,
                         const std::vector<int>& idx_b) {
  ChannelView va = channel_view("assemble_channels", a);
  ChannelView vb = channel_view("assemble_channels", b);
  if (va.batch != vb.batch || va.inner != vb.inner) {
    throw std::runtime_error("assemble_channels: incompatible shapes " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
  }
  if (static_cast<int64_t>(idx_a.size()) != va.channels ||
      static_cast<int64_t>(idx_b.size()) != vb.channels) {
    throw std::runtime_error("assemble_channels: index list lengths do not match channel counts");
  }
  const int64_t total_c = va.channels + vb.channels;
  std::vector<char> seen(static_cast<size_t>(total_c), 0);
  auto check_idx = [&](const std::vector<int>& idx) {
    for (int c : idx) {
      if (c < 0 || c >= total_c || seen[static_cast<size_t>(c)]) {
        throw std::runtime_error("assemble_channels: indices must form a permutation of 0.." +
                                 std::to_string(total_c - 1));
      }
      seen[static_cast<size_t>(c)] = 1;
    }
  };
  check_idx(idx_a);
  check_idx(idx_b);
  bool tr = track(t, {&a, &b});
  Shape out_shape = a->shape;
  out_shape[1] = static_cast<int>(total_c);
  Tensor y = tensor_zeros(out_shape, tr);
  for (int64_t bt = 0; bt < va.batch; ++bt) {
    for (int64_t i = 0; i < va.channels; ++i) {
      std::copy_n(a->value.data() + (bt * va.channels + i) * va.inner, va.inner,
                  y->value.data() + (bt * total_c + idx_a[i]) * va.inner);
    }
    for (int64_t i = 0; i < vb.channels; ++i) {
      std::copy_n(b->value.data() + (bt * vb.channels + i) * vb.inner, vb.inner,
                  y->value.data() + (bt * total_c + idx_b[i]) * vb.inner);
    }
  }
  if (tr) {
    t.record([a, b, y, idx_a, idx_b, va, vb, total_c] {
      y->ensure_grad();
      if (a->requires_grad) {
        a->ensure_grad();
        for (int64_t bt = 0; bt < va.batch; ++bt) {
          for (int64_t i = 0; i < va.channels; ++i) {
            const double* g = y->grad.data() + (bt * total_c + idx_a[i]) * va.inner;
            double* dst = a->grad.data() + (bt * va.channels + i) * va.inner;
            for (int64_t j = 0; j < va.inner; ++j) dst[j] += g[j];
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int64_t bt = 0; bt < vb.batch; ++bt) {
          for (int64_t i = 0; i < vb.channels; ++i) {
            const double* g = y->grad.data() + (bt * total_c + idx_b[i]) * vb.inner;
            double* dst = b->grad.data() + (bt * vb.channels + i) * vb.inner;
            for (int64_t j = 0; j < vb.inner; ++j) dst[j] += g[j];
          }
        }
      }
    });
  }
  return y;
}

Tensor roll_channels(Tape& t, const Tensor& x, int shift) {
  ChannelView v = channel_view("roll_channels", x);
  const int64_t c = v.channels;
  int64_t s = ((shift % c) + c) % c;
  bool tr = track(t, {&x});
  Tensor y = tensor_zeros(x->shape, tr);
  for (int64_t b = 0; b < v.batch; ++b) {
    for (int64_t ci = 0; ci < c; ++ci) {
      std::copy_n(x->value.data() + (b * c + ci) * v.inner, v.inner,
                  y->value.data() + (b * c + (ci + s) % c) * v.inner);
    }
  }
  if (tr) {
    t.record([x, y, v, c, s] {
      y->ensure_grad();
      x->ensure_grad();
      for (int64_t b = 0; b < v.batch; ++b) {
        for (int64_t ci = 0; ci < c; ++ci) {
          const double* g = y->grad.data() + (b * c + (ci + s) % c) * v.inner;
          double* dst = x->grad.data() + (b * c + ci) * v.inner;
          for (int64_t j = 0; j < v.inner; ++j) dst[j] += g[j];
        }
      }
    });
  }
  return y;
}

Tensor softmax1d(Tape& t, const Tensor& a) {
  if (a->shape.size() != 1) {
    throw std::runtime_error("softmax1d: expects 1-D input, got " + shape_str(a->shape));
  }
  bool tr = track(t, {&a});
  Tensor y = out_like(a, tr);
  const int64_t n = a->size();
  double mx = a->value[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, a->value[i]);
  double denom = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    y->value[i] = std::exp(a->value[i] - mx);
    denom += y->value[i];
  }
  for (int64_t i = 0; i < n; ++i) y->value[i] /= denom;
  if (tr) {
    t.record([a, y] {
      y->ensure_grad();
      a->ensure_grad();
      const int64_t m = y->size();
      double dot = 0.0;
      for (int64_t i = 0; i < m; ++i) dot += y->grad[i] * y->value[i];
      for (int64_t i = 0; i < m; ++i) a->grad[i] += y->value[i] * (y->grad[i] - dot);
    });
  }
  return y;
}

Tensor weighted_sum(Tape& t, const std::vector<Tensor>& xs, const Tensor& w) {
  if (xs.empty()) throw std::runtime_error("weighted_sum: empty input list");
  if (w->shape.size() != 1 || w->size() != static_cast<int64_t>(xs.size())) {
    throw std::runtime_error("weighted_sum: weight shape " + shape_str(w->shape) +
                             " does not match " + std::to_string(xs.size()) + " inputs");
  }
  for (const auto& x : xs) check_same_shape("weighted_sum", xs[0], x);
  bool tr = t.grad_enabled() && w->requires_grad;
  for (const auto& x : xs) tr = tr || (t.grad_enabled() && x->requires_grad);
  Tensor y = tensor_zeros(xs[0]->shape, tr);
  const int64_t n = y->size();
  for (size_t k = 0; k < xs.size(); ++k) {
    const double wk = w->value[k];
    const double* src = xs[k]->value.data();
    for (int64_t i = 0; i < n; ++i) y->value[i] += wk * src[i];
  }
  if (tr) {
    t.record([xs, w, y, n] {
      y->ensure_grad();
      for (size_t k = 0; k < xs.size(); ++k) {
        if (xs[k]->requires_grad) {
          xs[k]->ensure_grad();
          const double wk = w->value[k];
          double* dst = xs[k]->grad.data();
          for (int64_t i = 0; i < n; ++i) dst[i] += wk * y->grad[i];
        }
      }
      if (w->requires_grad) {
        w->ensure_grad();
        for (size_t k = 0; k < xs.size(); ++k) {
          const double* src = xs[k]->value.data();
          double acc = 0.0;
          for (int64_t i = 0; i < n; ++i) acc += y->grad[i] * src[i];
          w->grad[k] += acc;
        }
      }
    });
  }
  return y;
}

Tensor sum_all(Tape& t, const Tensor& a) {
  bool tr = track(t, {&a});
  Tensor y = tensor_zeros({1}, tr);
  double acc = 0.0;
  for (double v : a->value) acc += v;
  y->value[0] = acc;
  if (tr) {
    t.record([a, y] {
      y->ensure_grad();
      a->ensure_grad();
      const double g = y->grad[0];
      for (auto& gv : a->grad) gv += g;
    });
  }
  return y;
}

Tensor mse(Tape& t, const Tensor& pred, const Tensor& target) {
  check_same_shape("mse", pred, target);
  bool tr = track(t, {&pred, &target});
  Tensor y = tensor_zeros({1}, tr);
  const int64_t n = pred->size();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double d = pred->value[i] - target->value[i];
    acc += d * d;
  }
  y->value[0] = acc / static_cast<double>(n);
  if (tr) {
    t.record([pred, target, y, n] {
      y->ensure_grad();
      const double g = y->grad[0] * 2.0 / static_cast<double>(n);
      if (pred->requires_grad) {
        pred->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          pred->grad[i] += g * (pred->value[i] - target->value[i]);
        }
      }
      if (target->requires_grad) {
        target->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          target->grad[i] -= g * (pred->value[i] - target->value[i]);
        }
      }
    });
  }
  return y;
}

}  // namespace csinas
