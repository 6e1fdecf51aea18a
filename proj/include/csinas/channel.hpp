// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "csinas/rng.hpp"

namespace csinas {

using cd = std::complex<double>;

// Multipath scene description for one dataset. Zeros in spacing_m/max_delay_s
// mean "derive from carrier/bandwidth" (half-wavelength spacing; delay window
// covering 80% of the retained delay bins).
struct ScenarioConfig {
  int n_t = 16;   // BS antennas
  int n_f = 64;   // subcarriers
  int n_c = 16;   // retained delay bins
  int paths = 5;  // multipath count L
  double carrier_hz = 2.655e9;
  double bandwidth_hz = 20e6;
  double spacing_m = 0.0;
  double angle_spread_deg = 30.0;
  double max_delay_s = 0.0;
  uint64_t seed = 1;
  std::string id = "scene";

  void validate() const;
  double spacing() const;    // resolved antenna spacing
  double max_delay() const;  // resolved delay window
};

struct Path {
  double amp;    // real attenuation amplitude, > 0
  double phase;  // radians in [0, 2pi)
  double delay;  // seconds in [0, max_delay]
  double aod;    // azimuth of departure, radians
};

using PathRealization = std::vector<Path>;

// Draws L paths: delays uniform, phases uniform, AoDs uniform in a spread
// around a per-sample mean direction, amplitudes following an exponential
// power profile over delay and renormalized to unit total power.
PathRealization sample_paths(const ScenarioConfig& cfg, Rng& rng);

// Spatial-frequency response, row-major n_t x n_f. Column n is
// sum_l amp_l * exp(j(phase_l - 2 pi f_n delay_l)) * conj(a(aod_l)) with the
// ULA steering vector a (1/n_t scaling included, narrowband spatial phase).
std::vector<cd> synth_freq_response(const PathRealization& paths, const ScenarioConfig& cfg);

// Unitary 2D transform to the angular-delay domain, keeping the first n_c
// delay bins. Forward DFT along antennas; adjoint DFT along subcarriers, which
// places positive delays in the leading bins. Row-major n_t x n_c.
std::vector<cd> to_angular_delay(const std::vector<cd>& h_sf, int n_t, int n_f, int n_c);

// A generated dataset: count samples of shape (n_t, n_c, 2), stored f32 after
// affine normalization to [0,1] with the global lo/hi kept for inversion.
struct CsiDataset {
  int n_t = 0;
  int n_c = 0;
  uint64_t count = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::string scenario_id;
  std::vector<float> data;  // count * n_t * n_c * 2, (sample, antenna, delay, re/im)

  int64_t sample_len() const { return static_cast<int64_t>(n_t) * n_c * 2; }
  const float* sample(uint64_t i) const { return data.data() + i * sample_len(); }
  // Undoes normalization and re-pairs re/im into complex antenna x delay entries.
  std::vector<cd> sample_complex(uint64_t i) const;
};

CsiDataset generate_dataset(const ScenarioConfig& cfg, uint64_t count);

void save_dataset(const CsiDataset& ds, const std::string& path);
CsiDataset load_dataset(const std::string& path);

}  // namespace csinas
