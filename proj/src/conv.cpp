// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <stdexcept>

#include "csinas/tensor.hpp"

namespace csinas {

namespace {

bool track2(const Tape& t, const Tensor& a, const Tensor& b, const Tensor& c) {
  if (!t.grad_enabled()) return false;
  return (a && a->requires_grad) || (b && b->requires_grad) || (c && c->requires_grad);
}

}  // namespace

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
    throw std::runtime_error("matmul: incompatible shapes " + shape_str(a->shape) + " x " +
                             shape_str(b->shape));
  }
  const int64_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  bool tr = track2(t, a, b, nullptr);
  Tensor y = tensor_zeros({static_cast<int>(m), static_cast<int>(n)}, tr);
  for (int64_t i = 0; i < m; ++i) {
    double* yr = y->value.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = a->value[i * k + p];
      const double* br = b->value.data() + p * n;
      for (int64_t j = 0; j < n; ++j) yr[j] += av * br[j];
    }
  }
  if (tr) {
    t.record([a, b, y, m, k, n] {
      y->ensure_grad();
      if (a->requires_grad) {
        a->ensure_grad();
        for (int64_t i = 0; i < m; ++i) {
          const double* gy = y->grad.data() + i * n;
          for (int64_t p = 0; p < k; ++p) {
            const double* br = b->value.data() + p * n;
            double acc = 0.0;
            for (int64_t j = 0; j < n; ++j) acc += gy[j] * br[j];
            a->grad[i * k + p] += acc;
          }
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < m; ++i) {
          const double* gy = y->grad.data() + i * n;
          for (int64_t p = 0; p < k; ++p) {
            const double av = a->value[i * k + p];
            double* gb = b->grad.data() + p * n;
            for (int64_t j = 0; j < n; ++j) gb[j] += av * gy[j];
          }
        }
      }
    });
  }
  return y;
}

Tensor linear(Tape& t, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x->shape.size() != 2 || w->shape.size() != 2 || x->shape[1] != w->shape[1]) {
    throw std::runtime_error("linear: incompatible shapes x=" + shape_str(x->shape) +
                             " w=" + shape_str(w->shape));
  }
  const int64_t bs = x->shape[0], in = x->shape[1], out = w->shape[0];
  if (b && (b->shape.size() != 1 || b->shape[0] != out)) {
    throw std::runtime_error("linear: bias shape " + shape_str(b->shape) + " does not match " +
                             std::to_string(out) + " outputs");
  }
  bool tr = track2(t, x, w, b);
  Tensor y = tensor_zeros({static_cast<int>(bs), static_cast<int>(out)}, tr);
  for (int64_t i = 0; i < bs; ++i) {
    const double* xr = x->value.data() + i * in;
    double* yr = y->value.data() + i * out;
    for (int64_t o = 0; o < out; ++o) {
      const double* wr = w->value.data() + o * in;
      double acc = b ? b->value[o] : 0.0;
      for (int64_t j = 0; j < in; ++j) acc += xr[j] * wr[j];
      yr[o] = acc;
    }
  }
  if (tr) {
    t.record([x, w, b, y, bs, in, out] {
      y->ensure_grad();
      if (x->requires_grad) {
        x->ensure_grad();
        for (int64_t i = 0; i < bs; ++i) {
          const double* gy = y->grad.data() + i * out;
          double* gx = x->grad.data() + i * in;
          for (int64_t o = 0; o < out; ++o) {
            const double g = gy[o];
            const double* wr = w->value.data() + o * in;
            for (int64_t j = 0; j < in; ++j) gx[j] += g * wr[j];
          }
        }
      }
      if (w->requires_grad) {
        w->ensure_grad();
        for (int64_t i = 0; i < bs; ++i) {
          const double* gy = y->grad.data() + i * out;
          const double* xr = x->value.data() + i * in;
          for (int64_t o = 0; o < out; ++o) {
            const double g = gy[o];
            double* gw = w->grad.data() + o * in;
            for (int64_t j = 0; j < in; ++j) gw[j] += g * xr[j];
          }
        }
      }
      if (b && b->requires_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < bs; ++i) {
          const double* gy = y->grad.data() + i * out;
          for (int64_t o = 0; o < out; ++o) b->grad[o] += gy[o];
        }
      }
    });
  }
  return y;
}

// Stride-1 same-padding convolution. The inner loops run along the width axis
// on both input and output so they vectorize; accumulation order is fixed,
// which keeps repeated runs bitwise identical.
Tensor conv2d(Tape& t, const Tensor& x, const Tensor& kernel, const Tensor& bias, int dil_h,
              int dil_w, int groups) {
  if (x->shape.size() != 4 || kernel->shape.size() != 4) {
    throw std::runtime_error("conv2d: x=" + shape_str(x->shape) +
                             " kernel=" + shape_str(kernel->shape) + ", both must be 4-D");
  }
  const int64_t bs = x->shape[0], cin = x->shape[1], h = x->shape[2], w = x->shape[3];
  const int64_t cout = kernel->shape[0], cin_g = kernel->shape[1], kh = kernel->shape[2],
                kw = kernel->shape[3];
  if (groups < 1 || cin % groups != 0 || cout % groups != 0 || cin / groups != cin_g) {
    throw std::runtime_error("conv2d: group mismatch, cin=" + std::to_string(cin) +
                             " cout=" + std::to_string(cout) + " groups=" + std::to_string(groups) +
                             " kernel=" + shape_str(kernel->shape));
  }
  if (dil_h < 1 || dil_w < 1) throw std::runtime_error("conv2d: dilation must be >= 1");
  const int64_t span_h = (kh - 1) * dil_h, span_w = (kw - 1) * dil_w;
  if (span_h % 2 != 0 || span_w % 2 != 0) {
    throw std::runtime_error("conv2d: effective kernel span must be even for same padding");
  }
  const int64_t ph = span_h / 2, pw = span_w / 2;
  const int64_t cout_g = cout / groups;
  if (bias && (bias->shape.size() != 1 || bias->shape[0] != cout)) {
    throw std::runtime_error("conv2d: bias shape " + shape_str(bias->shape) +
                             " does not match cout=" + std::to_string(cout));
  }
  bool tr = track2(t, x, kernel, bias);
  Tensor y = tensor_zeros({static_cast<int>(bs), static_cast<int>(cout), static_cast<int>(h),
                           static_cast<int>(w)},
                          tr);
  const int64_t hw = h * w;
  for (int64_t b = 0; b < bs; ++b) {
    for (int64_t co = 0; co < cout; ++co) {
      double* yp = y->value.data() + (b * cout + co) * hw;
      if (bias) {
        const double bv = bias->value[co];
        for (int64_t i = 0; i < hw; ++i) yp[i] = bv;
      }
      const int64_t gi = co / cout_g;
      for (int64_t cim = 0; cim < cin_g; ++cim) {
        const double* xp = x->value.data() + (b * cin + gi * cin_g + cim) * hw;
        const double* kp = kernel->value.data() + (co * cin_g + cim) * kh * kw;
        for (int64_t ky = 0; ky < kh; ++ky) {
          const int64_t dy = ky * dil_h - ph;
          const int64_t oy0 = std::max<int64_t>(0, -dy), oy1 = std::min(h, h - dy);
          for (int64_t kx = 0; kx < kw; ++kx) {
            const double wt = kp[ky * kw + kx];
            if (wt == 0.0) continue;
            const int64_t dx = kx * dil_w - pw;
            const int64_t ox0 = std::max<int64_t>(0, -dx), ox1 = std::min(w, w - dx);
            for (int64_t oy = oy0; oy < oy1; ++oy) {
              double* yr = yp + oy * w;
              const double* xr = xp + (oy + dy) * w + dx;
              for (int64_t ox = ox0; ox < ox1; ++ox) yr[ox] += wt * xr[ox];
            }
          }
        }
      }
    }
  }
  if (tr) {
    t.record([x, kernel, bias, y, bs, cin, cout, cin_g, cout_g, h, w, kh, kw, dil_h, dil_w, ph,
              pw] {
      y->ensure_grad();
      const int64_t hw = h * w;
      if (x->requires_grad) {
        x->ensure_grad();
        for (int64_t b = 0; b < bs; ++b) {
          for (int64_t co = 0; co < cout; ++co) {
            const double* gy = y->grad.data() + (b * cout + co) * hw;
            const int64_t gi = co / cout_g;
            for (int64_t cim = 0; cim < cin_g; ++cim) {
              double* gx = x->grad.data() + (b * cin + gi * cin_g + cim) * hw;
              const double* kp = kernel->value.data() + (co * cin_g + cim) * kh * kw;
              for (int64_t ky = 0; ky < kh; ++ky) {
                const int64_t dy = ky * dil_h - ph;
                const int64_t oy0 = std::max<int64_t>(0, -dy), oy1 = std::min(h, h - dy);
                for (int64_t kx = 0; kx < kw; ++kx) {
                  const double wt = kp[ky * kw + kx];
                  if (wt == 0.0) continue;
                  const int64_t dx = kx * dil_w - pw;
                  const int64_t ox0 = std::max<int64_t>(0, -dx), ox1 = std::min(w, w - dx);
                  for (int64_t oy = oy0; oy < oy1; ++oy) {
                    const double* gr = gy + oy * w;
                    double* xr = gx + (oy + dy) * w + dx;
                    for (int64_t ox = ox0; ox < ox1; ++ox) xr[ox] += wt * gr[ox];
                  }
                }
              }
            }
          }
        }
      }
      if (kernel->requires_grad) {
        kernel->ensure_grad();
        for (int64_t b = 0; b < bs; ++b) {
          for (int64_t co = 0; co < cout; ++co) {
            const double* gy = y->grad.data() + (b * cout + co) * hw;
            const int64_t gi = co / cout_g;
            for (int64_t cim = 0; cim < cin_g; ++cim) {
              const double* xp = x->value.data() + (b * cin + gi * cin_g + cim) * hw;
              double* gk = kernel->grad.data() + (co * cin_g + cim) * kh * kw;
              for (int64_t ky = 0; ky < kh; ++ky) {
                const int64_t dy = ky * dil_h - ph;
                const int64_t oy0 = std::max<int64_t>(0, -dy), oy1 = std::min(h, h - dy);
                for (int64_t kx = 0; kx < kw; ++kx) {
                  const int64_t dx = kx * dil_w - pw;
                  const int64_t ox0 = std::max<int64_t>(0, -dx), ox1 = std::min(w, w - dx);
                  double acc = 0.0;
                  for (int64_t oy = oy0; oy < oy1; ++oy) {
                    const double* gr = gy + oy * w;
                    const double* xr = xp + (oy + dy) * w + dx;
                    for (int64_t ox = ox0; ox < ox1; ++ox) acc += gr[ox] * xr[ox];
                  }
                  gk[ky * kw + kx] += acc;
                }
              }
            }
          }
        }
      }
      if (bias && bias->requires_grad) {
        bias->ensure_grad();
        for (int64_t b = 0; b < bs; ++b) {
          for (int64_t co = 0; co < cout; ++co) {
            const double* gy = y->grad.data() + (b * cout + co) * hw;
            double acc = 0.0;
            for (int64_t i = 0; i < hw; ++i) acc += gy[i];
            bias->grad[co] += acc;
          }
        }
      }
    });
  }
  return y;
}

}  // namespace csinas
