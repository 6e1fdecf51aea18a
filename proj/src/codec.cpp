// SPDX-License-Identifier: Apache-2.0
#include "csinas/codec.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "csinas/rng.hpp"

namespace csinas {

ProjectionCodec ProjectionCodec::make_projection(int n, double cr, int bits, uint64_t seed) {
  if (n < 1) throw std::runtime_error("make_projection: n must be positive");
  if (!(cr > 0.0 && cr < 1.0)) {
    throw std::runtime_error("make_projection: compression ratio must lie in (0,1)");
  }
  if (bits < 1 || bits > 32) throw std::runtime_error("make_projection: bits must be in [1,32]");
  ProjectionCodec c;
  c.n_ = n;
  c.m_ = static_cast<int>(std::llround(n * cr));
  if (c.m_ < 1 || c.m_ >= n) {
    throw std::runtime_error("make_projection: m = " + std::to_string(c.m_) +
                             " degenerate for n = " + std::to_string(n));
  }
  c.bits_ = bits;
  c.seed_ = seed;
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(c.m_));
  c.a_.resize(static_cast<size_t>(c.m_) * n);
  for (auto& v : c.a_) v = rng.gaussian() * stddev;
  return c;
}

std::vector<double> ProjectionCodec::compress(const std::vector<double>& vec_h) const {
  if (static_cast<int>(vec_h.size()) != n_) {
    throw std::runtime_error("compress: vector length " + std::to_string(vec_h.size()) +
                             " does not match n = " + std::to_string(n_));
  }
  std::vector<double> s(static_cast<size_t>(m_), 0.0);
  for (int i = 0; i < m_; ++i) {
    const double* row = a_.data() + static_cast<size_t>(i) * n_;
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += row[j] * vec_h[static_cast<size_t>(j)];
    s[static_cast<size_t>(i)] = acc;
  }
  return s;
}

void ProjectionCodec::calibrate_quantizer(
    const std::vector<std::vector<double>>& training_codewords) {
  if (training_codewords.empty()) {
    throw std::runtime_error("calibrate_quantizer: need at least one codeword");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& cw : training_codewords) {
    for (double v : cw) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) {
    throw std::runtime_error("calibrate_quantizer: degenerate range, all codeword values equal");
  }
  q_lo_ = lo;
  q_hi_ = hi;
}

double ProjectionCodec::step() const {
  if (!calibrated()) throw std::runtime_error("quantizer used before calibration");
  const double levels = std::ldexp(1.0, bits_) - 1.0;  // 2^B - 1
  return (q_hi_ - q_lo_) / levels;
}

std::vector<uint32_t> ProjectionCodec::quantize(const std::vector<double>& s) const {
  if (!calibrated()) throw std::runtime_error("quantize: codec not calibrated");
  const double levels = std::ldexp(1.0, bits_) - 1.0;
  const double scale = levels / (q_hi_ - q_lo_);
  std::vector<uint32_t> codes(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    // round half away from zero, then clamp to the code range
    double c = std::round((s[i] - q_lo_) * scale);
    if (c < 0.0) c = 0.0;
    if (c > levels) c = levels;
    codes[i] = static_cast<uint32_t>(c);
  }
  return codes;
}

std::vector<double> ProjectionCodec::dequantize(const std::vector<uint32_t>& codes) const {
  if (!calibrated()) throw std::runtime_error("dequantize: codec not calibrated");
  const double st = step();
  std::vector<double> out(codes.size());
  for (size_t i = 0; i < codes.size(); ++i) {
    out[i] = q_lo_ + static_cast<double>(codes[i]) * st;
  }
  return out;
}

void ProjectionCodec::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("codec save: cannot open " + path);
  f.write("CSCX", 4);
  uint32_t m32 = static_cast<uint32_t>(m_), n32 = static_cast<uint32_t>(n_),
           b32 = static_cast<uint32_t>(bits_);
  f.write(reinterpret_cast<const char*>(&m32), 4);
  f.write(reinterpret_cast<const char*>(&n32), 4);
  f.write(reinterpret_cast<const char*>(&b32), 4);
  f.write(reinterpret_cast<const char*>(&seed_), 8);
  f.write(reinterpret_cast<const char*>(&q_lo_), 8);
  f.write(reinterpret_cast<const char*>(&q_hi_), 8);
  f.write(reinterpret_cast<const char*>(a_.data()),
          static_cast<std::streamsize>(a_.size() * sizeof(double)));
  if (!f) throw std::runtime_error("codec save: write failed for " + path);
}

ProjectionCodec ProjectionCodec::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("codec load: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "CSCX", 4) != 0) {
    throw std::runtime_error("codec load: " + path + " is not a CSCX file");
  }
  ProjectionCodec c;
  uint32_t m32, n32, b32;
  f.read(reinterpret_cast<char*>(&m32), 4);
  f.read(reinterpret_cast<char*>(&n32), 4);
  f.read(reinterpret_cast<char*>(&b32), 4);
  f.read(reinterpret_cast<char*>(&c.seed_), 8);
  f.read(reinterpret_cast<char*>(&c.q_lo_), 8);
  f.read(reinterpret_cast<char*>(&c.q_hi_), 8);
  if (!f) throw std::runtime_error("codec load: truncated header in " + path);
  c.m_ = static_cast<int>(m32);
  c.n_ = static_cast<int>(n32);
  c.bits_ = static_cast<int>(b32);
  if (c.m_ < 1 || c.n_ <= c.m_ || c.bits_ < 1 || c.bits_ > 32) {
    throw std::runtime_error("codec load: invalid header in " + path);
  }
  c.a_.resize(static_cast<size_t>(c.m_) * c.n_);
  f.read(reinterpret_cast<char*>(c.a_.data()),
         static_cast<std::streamsize>(c.a_.size() * sizeof(double)));
  if (!f) throw std::runtime_error("codec load: truncated matrix in " + path);
  return c;
}

double nmse_db(double linear) {
  if (linear < 0.0) throw std::runtime_error("nmse_db: negative value");
  if (linear == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(linear);
}

std::string format_db(double db) {
  if (std::isinf(db) && db < 0) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", db);
  return buf;
}

NmseResult nmse(const std::vector<double>& h_true, const std::vector<double>& h_hat,
                int64_t sample_len) {
  if (h_true.size() != h_hat.size()) throw std::runtime_error("nmse: batch size mismatch");
  if (sample_len < 1 || h_true.size() % static_cast<size_t>(sample_len) != 0) {
    throw std::runtime_error("nmse: batch is not a whole number of samples");
  }
  const size_t count = h_true.size() / static_cast<size_t>(sample_len);
  double acc = 0.0;
  for (size_t s = 0; s < count; ++s) {
    const double* t = h_true.data() + s * sample_len;
    const double* p = h_hat.data() + s * sample_len;
    double num = 0.0, den = 0.0;
    for (int64_t i = 0; i < sample_len; ++i) {
      const double d = t[i] - p[i];
      num += d * d;
      den += t[i] * t[i];
    }
    if (!(den > 0.0)) throw std::runtime_error("nmse: all-zero reference sample");
    acc += num / den;
  }
  NmseResult r;
  r.linear = acc / static_cast<double>(count);
  r.db = nmse_db(r.linear);
  return r;
}

SplitIndices split_dataset(uint64_t count, const std::array<double, 3>& ratios, uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::runtime_error("split_dataset: ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error("split_dataset: ratios must sum to 1");
  }
  std::vector<uint64_t> order(count);
  for (uint64_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const uint64_t n1 = static_cast<uint64_t>(std::llround(ratios[0] * static_cast<double>(count)));
  const uint64_t n2 = static_cast<uint64_t>(std::llround(ratios[1] * static_cast<double>(count)));
  if (n1 + n2 > count) throw std::runtime_error("split_dataset: rounded sizes exceed count");
  SplitIndices s;
  s.train_omega.assign(order.begin(), order.begin() + n1);
  s.train_alpha.assign(order.begin() + n1, order.begin() + n1 + n2);
  s.test.assign(order.begin() + n1 + n2, order.end());
  return s;
}

}  // namespace csinas
