// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "csinas/channel.hpp"

namespace csinas {

// Per-antenna and per-delay average power of one complex angular-delay matrix
// (row-major n_t x n_c). PAS[k] = (1/n_t) * sum_d |H[k,d]|^2 over the delay
// axis; PDP[d] = (1/n_c) * sum_k |H[k,d]|^2 over the antenna axis.
std::pair<std::vector<double>, std::vector<double>> pas_pdp(const std::vector<cd>& h, int n_t,
                                                            int n_c);

// Normalized power spectral entropy of a power distribution derived from v:
// p_i = |v_i|^2 / sum_j |v_j|^2, PSE = -(1/log2 K) sum p_i log2 p_i, in [0,1].
double pse(const std::vector<double>& v);
double pse(const std::vector<cd>& v);

// PSE of the full vectorized complex sample (denormalized).
double sample_pse(const CsiDataset& ds, uint64_t index);

// One-sided Mann-Whitney p-value (normal approximation with tie-averaged
// ranks and continuity correction) for the alternative "xs stochastically
// greater than ys".
double mann_whitney_greater_p(const std::vector<double>& xs, const std::vector<double>& ys);

struct Histogram {
  double lo, hi;
  std::vector<int64_t> counts;
};

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi);

}  // namespace csinas
