// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "csinas/tensor.hpp"

namespace csinas {

// Central-difference gradient verification. The builder must reconstruct the
// same forward graph on every call (any internal randomness re-seeded), return
// the scalar loss, and read parameter values from the tensors it was given so
// the harness can nudge them.
//
// Returns max over all parameter elements of |analytic - numeric| / max(1, |numeric|).
double grad_check_fn(const std::function<Tensor(Tape&)>& loss_builder,
                     const std::vector<Tensor>& params, double epsilon);

}  // namespace csinas
