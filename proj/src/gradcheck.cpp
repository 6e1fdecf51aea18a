// SPDX-License-Identifier: Apache-2.0
#include "csinas/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace csinas {

double grad_check_fn(const std::function<Tensor(Tape&)>& loss_builder,
                     const std::vector<Tensor>& params, double epsilon) {
  if (epsilon <= 0.0) throw std::runtime_error("grad_check_fn: epsilon must be positive");

  Tape tape;
  Tensor loss = loss_builder(tape);
  for (const auto& p : params) p->zero_grad();
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      Tape t_plus;
      NoGradGuard off_plus(t_plus);
      p.value[i] = saved + epsilon;
      const double f_plus = loss_builder(t_plus)->value[0];
      Tape t_minus;
      NoGradGuard off_minus(t_minus);
      p.value[i] = saved - epsilon;
      const double f_minus = loss_builder(t_minus)->value[0];
      p.value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double err = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace csinas
