// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "csinas/tensor.hpp"

namespace csinas {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_decay = 1.0;  // per-epoch multiplier; 1.0 disables the schedule
};

// Adam with bias correction over a fixed parameter group. First and second
// moments are stored per element; the step counter is shared by the group.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opts);

  // Effective lr becomes lr * lr_decay^epoch for subsequent steps.
  void set_epoch(int epoch);

  void zero_grad();
  void step();

  int64_t steps_taken() const { return steps_; }
  double current_lr() const { return lr_now_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_, v_;
  int64_t steps_ = 0;
  double lr_now_;
};

}  // namespace csinas
