// SPDX-License-Identifier: Apache-2.0
#include "csinas/channel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "csinas/parallel.hpp"

namespace csinas {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSpeedOfLight = 299792458.0;
}  // namespace

void ScenarioConfig::validate() const {
  if (n_t < 1 || n_f < 1 || n_c < 1) throw std::runtime_error("scenario: dims must be positive");
  if (n_c > n_f) throw std::runtime_error("scenario: n_c must not exceed n_f");
  if (paths < 1) throw std::runtime_error("scenario: need at least one path");
  if (carrier_hz <= 0 || bandwidth_hz <= 0) {
    throw std::runtime_error("scenario: carrier/bandwidth must be positive");
  }
  if (spacing_m < 0 || max_delay_s < 0) {
    throw std::runtime_error("scenario: spacing/max_delay must be non-negative");
  }
  if (angle_spread_deg < 0 || angle_spread_deg > 360) {
    throw std::runtime_error("scenario: angle spread out of range");
  }
}

double ScenarioConfig::spacing() const {
  if (spacing_m > 0) return spacing_m;
  return 0.5 * kSpeedOfLight / carrier_hz;  // half wavelength
}

double ScenarioConfig::max_delay() const {
  if (max_delay_s > 0) return max_delay_s;
  // Keep path energy inside the retained delay window with some guard margin.
  return 0.8 * static_cast<double>(n_c) / bandwidth_hz;
}

PathRealization sample_paths(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  const double spread = cfg.angle_spread_deg * kTwoPi / 360.0;
  const double mean_aod = rng.uniform(-kTwoPi / 6.0, kTwoPi / 6.0);  // +-60 degrees
  const double tau_max = cfg.max_delay();
  const double tau_scale = tau_max / 3.0;
  PathRealization paths(static_cast<size_t>(cfg.paths));
  double power = 0.0;
  for (auto& p : paths) {
    p.aod = mean_aod + rng.uniform(-spread / 2.0, spread / 2.0);
    p.phase = rng.uniform(0.0, kTwoPi);
    p.delay = rng.uniform(0.0, tau_max);
    p.amp = std::exp(-p.delay / tau_scale);
    power += p.amp * p.amp;
  }
  const double scale = 1.0 / std::sqrt(power);
  for (auto& p : paths) p.amp *= scale;
  return paths;
}

std::vector<cd> synth_freq_response(const PathRealization& paths, const ScenarioConfig& cfg) {
  cfg.validate();
  if (paths.empty()) throw std::runtime_error("synth_freq_response: empty path list");
  const int nt = cfg.n_t, nf = cfg.n_f;
  const double delta_f = cfg.bandwidth_hz / static_cast<double>(nf);
  // Narrowband spatial phase increment at the carrier.
  const double vpi = kTwoPi * cfg.spacing() * cfg.carrier_hz / kSpeedOfLight;
  std::vector<cd> h(static_cast<size_t>(nt) * nf, cd(0.0, 0.0));
  const double inv_nt = 1.0 / static_cast<double>(nt);
  for (const Path& p : paths) {
    const double step = vpi * std::sin(p.aod);
    for (int n = 0; n < nf; ++n) {
      const double fn = cfg.carrier_hz + n * delta_f;
      const cd gain = p.amp * std::polar(1.0, p.phase - kTwoPi * fn * p.delay);
      for (int m = 0; m < nt; ++m) {
        // conj of the steering entry e^{-j vpi m sin(aod)} / n_t
        h[static_cast<size_t>(m) * nf + n] += gain * std::polar(inv_nt, step * m);
      }
    }
  }
  return h;
}

std::vector<cd> to_angular_delay(const std::vector<cd>& h_sf, int n_t, int n_f, int n_c) {
  if (n_c > n_f) throw std::runtime_error("to_angular_delay: n_c exceeds n_f");
  if (h_sf.size() != static_cast<size_t>(n_t) * n_f) {
    throw std::runtime_error("to_angular_delay: matrix size does not match n_t x n_f");
  }
  // Delay axis first: adjoint unitary DFT over subcarriers, truncated to n_c.
  std::vector<cd> delay(static_cast<size_t>(n_t) * n_c, cd(0.0, 0.0));
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(n_f));
  for (int m = 0; m < n_t; ++m) {
    for (int k = 0; k < n_c; ++k) {
      cd acc(0.0, 0.0);
      for (int n = 0; n < n_f; ++n) {
        const double ang = kTwoPi * static_cast<double>(n) * k / n_f;
        acc += h_sf[static_cast<size_t>(m) * n_f + n] * std::polar(1.0, ang);
      }
      delay[static_cast<size_t>(m) * n_c + k] = acc * inv_sqrt_f;
    }
  }
  // Angular axis: forward unitary DFT over antennas.
  std::vector<cd> out(static_cast<size_t>(n_t) * n_c, cd(0.0, 0.0));
  const double inv_sqrt_t = 1.0 / std::sqrt(static_cast<double>(n_t));
  for (int k = 0; k < n_t; ++k) {
    for (int d = 0; d < n_c; ++d) {
      cd acc(0.0, 0.0);
      for (int m = 0; m < n_t; ++m) {
        const double ang = -kTwoPi * static_cast<double>(k) * m / n_t;
        acc += delay[static_cast<size_t>(m) * n_c + d] * std::polar(1.0, ang);
      }
      out[static_cast<size_t>(k) * n_c + d] = acc * inv_sqrt_t;
    }
  }
  return out;
}

std::vector<cd> CsiDataset::sample_complex(uint64_t i) const {
  if (i >= count) throw std::runtime_error("sample_complex: index out of range");
  const float* s = sample(i);
  std::vector<cd> out(static_cast<size_t>(n_t) * n_c);
  const double span = hi - lo;
  for (size_t j = 0; j < out.size(); ++j) {
    const double re = lo + static_cast<double>(s[2 * j]) * span;
    const double im = lo + static_cast<double>(s[2 * j + 1]) * span;
    out[j] = cd(re, im);
  }
  return out;
}

CsiDataset generate_dataset(const ScenarioConfig& cfg, uint64_t count) {
  cfg.validate();
  if (count < 1) throw std::runtime_error("generate_dataset: count must be >= 1");
  CsiDataset ds;
  ds.n_t = cfg.n_t;
  ds.n_c = cfg.n_c;
  ds.count = count;
  ds.scenario_id = cfg.id;
  const int64_t slen = ds.sample_len();
  std::vector<double> raw(static_cast<size_t>(count) * slen);
  // One counter-based substream per sample: parallel generation matches the
  // serial order bit-for-bit.
  parallel_for(static_cast<int64_t>(count), 16, [&](int64_t b, int64_t e) {
    for (int64_t i = b; i < e; ++i) {
      Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(i)));
      PathRealization paths = sample_paths(cfg, rng);
      std::vector<cd> h_sf = synth_freq_response(paths, cfg);
      std::vector<cd> h_ad = to_angular_delay(h_sf, cfg.n_t, cfg.n_f, cfg.n_c);
      double* dst = raw.data() + i * slen;
      for (size_t j = 0; j < h_ad.size(); ++j) {
        dst[2 * j] = h_ad[j].real();
        dst[2 * j + 1] = h_ad[j].imag();
      }
    }
  });
  double lo = raw[0], hi = raw[0];
  for (double v : raw) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi - lo > 1e-30)) {
    throw std::runtime_error("generate_dataset: degenerate value range, cannot normalize");
  }
  ds.lo = lo;
  ds.hi = hi;
  ds.data.resize(raw.size());
  const double inv_span = 1.0 / (hi - lo);
  for (size_t j = 0; j < raw.size(); ++j) {
    ds.data[j] = static_cast<float>((raw[j] - lo) * inv_span);
  }
  return ds;
}

namespace {

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("dataset file: truncated read");
  return v;
}

}  // namespace

void save_dataset(const CsiDataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
  f.write("CSID", 4);
  put<uint32_t>(f, 1);
  put<uint32_t>(f, static_cast<uint32_t>(ds.n_t));
  put<uint32_t>(f, static_cast<uint32_t>(ds.n_c));
  put<uint64_t>(f, ds.count);
  put<double>(f, ds.lo);
  put<double>(f, ds.hi);
  put<uint32_t>(f, static_cast<uint32_t>(ds.scenario_id.size()));
  f.write(ds.scenario_id.data(), static_cast<std::streamsize>(ds.scenario_id.size()));
  f.write(reinterpret_cast<const char*>(ds.data.data()),
          static_cast<std::streamsize>(ds.data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("save_dataset: write failed for " + path);
}

CsiDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "CSID", 4) != 0) {
    throw std::runtime_error("load_dataset: " + path + " is not a CSID file");
  }
  const uint32_t version = get<uint32_t>(f);
  if (version != 1) {
    throw std::runtime_error("load_dataset: unsupported version " + std::to_string(version));
  }
  CsiDataset ds;
  ds.n_t = static_cast<int>(get<uint32_t>(f));
  ds.n_c = static_cast<int>(get<uint32_t>(f));
  ds.count = get<uint64_t>(f);
  ds.lo = get<double>(f);
  ds.hi = get<double>(f);
  const uint32_t id_len = get<uint32_t>(f);
  ds.scenario_id.resize(id_len);
  if (id_len > 0) {
    f.read(ds.scenario_id.data(), id_len);
    if (!f) throw std::runtime_error("load_dataset: truncated scenario id");
  }
  if (ds.n_t < 1 || ds.n_c < 1 || ds.count < 1) {
    throw std::runtime_error("load_dataset: invalid header in " + path);
  }
  const size_t n = static_cast<size_t>(ds.count) * ds.sample_len();
  ds.data.resize(n);
  f.read(reinterpret_cast<char*>(ds.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!f) throw std::runtime_error("load_dataset: truncated sample data in " + path);
  f.peek();
  if (!f.eof()) throw std::runtime_error("load_dataset: trailing bytes in " + path);
  return ds;
}

}  // namespace csinas
