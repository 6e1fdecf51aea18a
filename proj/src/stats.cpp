// SPDX-License-Identifier: Apache-2.0
#include "csinas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csinas {

std::pair<std::vector<double>, std::vector<double>> pas_pdp(const std::vector<cd>& h, int n_t,
                                                            int n_c) {
  if (h.size() != static_cast<size_t>(n_t) * n_c) {
    throw std::runtime_error("pas_pdp: matrix size does not match n_t x n_c");
  }
  std::vector<double> pas(static_cast<size_t>(n_t), 0.0);
  std::vector<double> pdp(static_cast<size_t>(n_c), 0.0);
  for (int k = 0; k < n_t; ++k) {
    for (int d = 0; d < n_c; ++d) {
      const double p = std::norm(h[static_cast<size_t>(k) * n_c + d]);
      pas[static_cast<size_t>(k)] += p;
      pdp[static_cast<size_t>(d)] += p;
    }
  }
  for (auto& v : pas) v /= static_cast<double>(n_t);
  for (auto& v : pdp) v /= static_cast<double>(n_c);
  return {pas, pdp};
}

namespace {

double pse_from_powers(std::vector<double> p) {
  const size_t k = p.size();
  if (k == 0) throw std::runtime_error("pse: empty vector");
  double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw std::runtime_error("pse: all-zero vector has no power distribution");
  if (k == 1) return 0.0;
  double h = 0.0;
  for (double pi : p) {
    if (pi > 0.0) {
      const double q = pi / total;
      h -= q * std::log2(q);
    }
  }
  return h / std::log2(static_cast<double>(k));
}

}  // namespace

double pse(const std::vector<double>& v) {
  std::vector<double> p(v.size());
  for (size_t i = 0; i < v.size(); ++i) p[i] = v[i] * v[i];
  return pse_from_powers(std::move(p));
}

double pse(const std::vector<cd>& v) {
  std::vector<double> p(v.size());
  for (size_t i = 0; i < v.size(); ++i) p[i] = std::norm(v[i]);
  return pse_from_powers(std::move(p));
}

double sample_pse(const CsiDataset& ds, uint64_t index) { return pse(ds.sample_complex(index)); }

double mann_whitney_greater_p(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n1 = xs.size(), n2 = ys.size();
  if (n1 == 0 || n2 == 0) throw std::runtime_error("mann_whitney: empty sample");
  struct Tagged {
    double v;
    int from_x;
  };
  std::vector<Tagged> all;
  all.reserve(n1 + n2);
  for (double v : xs) all.push_back({v, 1});
  for (double v : ys) all.push_back({v, 0});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.v < b.v; });
  // Tie-averaged ranks (1-based).
  double rank_sum_x = 0.0;
  double tie_term = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (size_t k = i; k < j; ++k) {
      if (all[k].from_x) rank_sum_x += avg_rank;
    }
    i = j;
  }
  const double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
  const double n = fn1 + fn2;
  const double u = rank_sum_x - fn1 * (fn1 + 1.0) / 2.0;
  const double mean_u = fn1 * fn2 / 2.0;
  const double var_u = fn1 * fn2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var_u > 0.0)) return 1.0;  // all values identical: no evidence
  const double z = (u - mean_u - 0.5) / std::sqrt(var_u);
  // P(Z >= z) for the upper tail
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1) throw std::runtime_error("histogram: need at least one bin");
  if (!(hi > lo)) throw std::runtime_error("histogram: hi must exceed lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<size_t>(bins), 0);
  const double scale = bins / (hi - lo);
  for (double v : values) {
    int b = static_cast<int>((v - lo) * scale);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++h.counts[static_cast<size_t>(b)];
  }
  return h;
}

}  // namespace csinas
