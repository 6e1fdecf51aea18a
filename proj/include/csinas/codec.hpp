// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace csinas {

// Compressed-sensing feedback leg: fixed Gaussian projection followed by a
// uniform scalar quantizer whose range is calibrated on training codewords.
class ProjectionCodec {
 public:
  // A is m x n with i.i.d. Gaussian(0, 1/m) entries, m = round(n * cr).
  static ProjectionCodec make_projection(int n, double cr, int bits, uint64_t seed);

  std::vector<double> compress(const std::vector<double>& vec_h) const;

  // q_lo/q_hi become the global min/max over the provided codewords.
  void calibrate_quantizer(const std::vector<std::vector<double>>& training_codewords);
  bool calibrated() const { return q_hi_ > q_lo_; }

  std::vector<uint32_t> quantize(const std::vector<double>& s) const;
  std::vector<double> dequantize(const std::vector<uint32_t>& codes) const;

  int m() const { return m_; }
  int n() const { return n_; }
  int bits() const { return bits_; }
  uint64_t seed() const { return seed_; }
  double q_lo() const { return q_lo_; }
  double q_hi() const { return q_hi_; }
  double step() const;
  const std::vector<double>& matrix() const { return a_; }

  void save(const std::string& path) const;
  static ProjectionCodec load(const std::string& path);

 private:
  ProjectionCodec() = default;

  int m_ = 0, n_ = 0, bits_ = 0;
  uint64_t seed_ = 0;
  double q_lo_ = 0.0, q_hi_ = 0.0;  // equal means "not calibrated yet"
  std::vector<double> a_;           // row-major m x n
};

struct NmseResult {
  double linear;
  double db;  // -inf when linear == 0, rendered as "-inf" in reports
};

double nmse_db(double linear);
std::string format_db(double db);

// Mean over samples of |H - H_hat|^2 / |H|^2. Batches are flat arrays of
// equal-length samples laid out back to back.
NmseResult nmse(const std::vector<double>& h_true, const std::vector<double>& h_hat,
                int64_t sample_len);

struct SplitIndices {
  std::vector<uint64_t> train_omega;
  std::vector<uint64_t> train_alpha;
  std::vector<uint64_t> test;
};

// Seeded shuffle split; first two sizes rounded from the ratios, remainder to
// the test split. Ratios must be positive and sum to 1.
SplitIndices split_dataset(uint64_t count, const std::array<double, 3>& ratios, uint64_t seed);

}  // namespace csinas
