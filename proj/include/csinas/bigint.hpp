// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace csinas {

// Unsigned big integer, base 2^32 limbs, little-endian. Search-space counts
// overflow uint64 well before the sizes quoted for real configurations, and
// the exactness contract rules out doubles; only product/power/compare/print
// are needed, so this stays minimal instead of pulling in GMP.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(uint64_t v) {
    limbs_.push_back(static_cast<uint32_t>(v & 0xffffffffULL));
    uint32_t hi = static_cast<uint32_t>(v >> 32);
    if (hi) limbs_.push_back(hi);
  }

  BigUint& operator*=(uint64_t m) {
    if (m == 0) {
      limbs_.assign(1, 0);
      return *this;
    }
    unsigned __int128 carry = 0;
    for (auto& limb : limbs_) {
      unsigned __int128 cur = static_cast<unsigned __int128>(limb) * m + carry;
      limb = static_cast<uint32_t>(cur & 0xffffffffULL);
      carry = cur >> 32;
    }
    while (carry) {
      limbs_.push_back(static_cast<uint32_t>(carry & 0xffffffffULL));
      carry >>= 32;
    }
    return *this;
  }

  static BigUint pow(uint64_t base, uint64_t exp) {
    BigUint r(1);
    for (uint64_t i = 0; i < exp; ++i) r *= base;
    return r;
  }

  bool is_zero() const { return limbs_.size() == 1 && limbs_[0] == 0; }

  bool operator==(const BigUint& o) const { return limbs_ == o.limbs_; }

  bool operator<(const BigUint& o) const {
    if (limbs_.size() != o.limbs_.size()) return limbs_.size() < o.limbs_.size();
    for (size_t i = limbs_.size(); i-- > 0;) {
      if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i];
    }
    return false;
  }

  // Decimal string, exact.
  std::string to_string() const {
    std::vector<uint32_t> work(limbs_);
    std::string out;
    while (!(work.size() == 1 && work[0] == 0)) {
      uint64_t rem = 0;
      for (size_t i = work.size(); i-- > 0;) {
        uint64_t cur = (rem << 32) | work[i];
        work[i] = static_cast<uint32_t>(cur / 1000000000ULL);
        rem = cur % 1000000000ULL;
      }
      while (work.size() > 1 && work.back() == 0) work.pop_back();
      std::string block = std::to_string(rem);
      if (work.size() == 1 && work[0] == 0) {
        out = block + out;
      } else {
        out = std::string(9 - block.size(), '0') + block + out;
      }
    }
    return out.empty() ? "0" : out;
  }

  double to_double() const {
    double v = 0.0;
    for (size_t i = limbs_.size(); i-- > 0;) v = v * 4294967296.0 + static_cast<double>(limbs_[i]);
    return v;
  }

 private:
  std::vector<uint32_t> limbs_;
};

}  // namespace csinas
