// SPDX-License-Identifier: Apache-2.0
#include "csinas/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace csinas {

Adam::Adam(std::vector<Tensor> params, AdamOptions opts)
    : params_(std::move(params)), opts_(opts), lr_now_(opts.lr) {
  for (const auto& p : params_) {
    if (!p) throw std::runtime_error("Adam: null parameter");
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::set_epoch(int epoch) {
  if (epoch < 0) throw std::runtime_error("Adam: negative epoch");
  lr_now_ = opts_.lr * std::pow(opts_.lr_decay, epoch);
}

void Adam::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void Adam::step() {
  ++steps_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = *params_[pi];
    if (p.grad.empty()) p.ensure_grad();  // untouched params see zero gradient
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr_now_ * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

}  // namespace csinas
