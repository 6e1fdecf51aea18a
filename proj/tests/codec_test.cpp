// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "csinas/codec.hpp"
#include "csinas/rng.hpp"

using namespace csinas;

TEST_CASE("projection sizing follows m = round(n * cr)") {
  ProjectionCodec c = ProjectionCodec::make_projection(512, 0.25, 8, 1);
  CHECK(c.m() == 128);
  CHECK(c.n() == 512);
  CHECK(c.bits() == 8);
  CHECK(c.seed() == 1);
  CHECK(c.matrix().size() == 128u * 512u);
  CHECK(!c.calibrated());

  CHECK(ProjectionCodec::make_projection(130, 0.25, 8, 1).m() == 33);  // 32.5 rounds away
  CHECK(ProjectionCodec::make_projection(100, 1.0 / 16.0, 8, 1).m() == 6);

  CHECK_THROWS_AS(ProjectionCodec::make_projection(100, 0.0, 8, 1), std::runtime_error);
  CHECK_THROWS_AS(ProjectionCodec::make_projection(100, 1.0, 8, 1), std::runtime_error);
}

TEST_CASE("projection entries look like Gaussian(0, 1/m)") {
  ProjectionCodec c = ProjectionCodec::make_projection(256, 0.5, 8, 42);
  const std::vector<double>& a = c.matrix();
  double mean = 0.0, var = 0.0;
  for (double v : a) mean += v;
  mean /= static_cast<double>(a.size());
  for (double v : a) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.size());
  CHECK(std::abs(mean) < 0.002);
  CHECK(var == doctest::Approx(1.0 / 128.0).epsilon(0.05));

  // Same seed reproduces the matrix, a different seed does not.
  ProjectionCodec c2 = ProjectionCodec::make_projection(256, 0.5, 8, 42);
  CHECK(std::memcmp(a.data(), c2.matrix().data(), a.size() * sizeof(double)) == 0);
  ProjectionCodec c3 = ProjectionCodec::make_projection(256, 0.5, 8, 43);
  CHECK(std::memcmp(a.data(), c3.matrix().data(), a.size() * sizeof(double)) != 0);
}

TEST_CASE("compress is the plain matrix product") {
  ProjectionCodec c = ProjectionCodec::make_projection(16, 0.25, 8, 7);
  Rng rng(3);
  std::vector<double> v(16);
  for (double& x : v) x = rng.gaussian();
  std::vector<double> s = c.compress(v);
  REQUIRE(s.size() == 4);
  for (int i = 0; i < 4; ++i) {
    double dot = 0.0;
    for (int j = 0; j < 16; ++j) dot += c.matrix()[i * 16 + j] * v[j];
    CHECK(s[i] == doctest::Approx(dot).epsilon(1e-12));
  }
  CHECK_THROWS_AS(c.compress(std::vector<double>(15, 0.0)), std::runtime_error);
}

TEST_CASE("quantizer requires calibration and pins its range to the codewords") {
  ProjectionCodec c = ProjectionCodec::make_projection(16, 0.25, 8, 7);
  CHECK_THROWS_AS(c.quantize({0.0, 0.0, 0.0, 0.0}), std::runtime_error);
  CHECK_THROWS_AS(c.dequantize({0, 0, 0, 0}), std::runtime_error);
  CHECK_THROWS_AS(c.step(), std::runtime_error);

  CHECK_THROWS_AS(c.calibrate_quantizer({}), std::runtime_error);
  CHECK_THROWS_AS(c.calibrate_quantizer({{1.0, 1.0}, {1.0}}), std::runtime_error);

  c.calibrate_quantizer({{-2.0, 0.5}, {3.0, 1.0}});
  CHECK(c.calibrated());
  CHECK(c.q_lo() == -2.0);
  CHECK(c.q_hi() == 3.0);
  CHECK(c.step() == doctest::Approx(5.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("8-bit codes land on the expected levels") {
  ProjectionCodec c = ProjectionCodec::make_projection(16, 0.25, 8, 7);
  c.calibrate_quantizer({{0.0, 1.0}});
  std::vector<uint32_t> codes = c.quantize({0.0, 0.5, 1.0, -5.0, 7.0});
  CHECK(codes == std::vector<uint32_t>{0, 128, 255, 0, 255});
  std::vector<double> back = c.dequantize({0, 128, 255});
  CHECK(back[0] == 0.0);
  CHECK(back[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
  CHECK(back[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("round-trip error stays within half a step at 4, 8 and 32 bits") {
  for (int bits : {4, 8, 32}) {
    ProjectionCodec c = ProjectionCodec::make_projection(16, 0.25, bits, 7);
    c.calibrate_quantizer({{-1.3, 2.7}});
    const double half = c.step() / 2;
    Rng rng(1000 + bits);
    std::vector<double> vals(100000);
    for (double& v : vals) v = rng.uniform(-1.3, 2.7);
    std::vector<double> back = c.dequantize(c.quantize(vals));
    double worst = 0.0;
    for (size_t i = 0; i < vals.size(); ++i) {
      worst = std::max(worst, std::abs(back[i] - vals[i]));
    }
    CHECK_MESSAGE(worst <= half + 1e-12, "bits=" << bits << " worst=" << worst);
  }
}

TEST_CASE("quantization preserves order") {
  ProjectionCodec c = ProjectionCodec::make_projection(16, 0.25, 6, 7);
  c.calibrate_quantizer({{-1.0, 1.0}});
  Rng rng(5);
  std::vector<double> vals(10000);
  for (double& v : vals) v = rng.uniform(-1.2, 1.2);
  std::sort(vals.begin(), vals.end());
  std::vector<uint32_t> codes = c.quantize(vals);
  for (size_t i = 1; i < codes.size(); ++i) CHECK(codes[i] >= codes[i - 1]);
}

TEST_CASE("NMSE averages per-sample error ratios") {
  // Two samples of length 2 with ratios 0.25 and 2.5e-6; the mean of ratios
  // differs from the pooled ratio, which pins the convention.
  std::vector<double> h = {1, 0, 0, 2};
  std::vector<double> hat = {0.5, 0, 0, 1.999};
  NmseResult r = nmse(h, hat, 2);
  double expect = (0.25 + (0.001 * 0.001) / 4.0) / 2.0;
  CHECK(r.linear == doctest::Approx(expect).epsilon(1e-12));
  CHECK(r.db == doctest::Approx(10.0 * std::log10(expect)).epsilon(1e-12));

  NmseResult perfect = nmse(h, h, 2);
  CHECK(perfect.linear == 0.0);
  CHECK(std::isinf(perfect.db));
  CHECK(format_db(perfect.db) == "-inf");
  double parsed = std::stod(format_db(r.db));
  CHECK(parsed == doctest::Approx(r.db).epsilon(1e-9));

  CHECK_THROWS_AS(nmse(h, {1.0, 2.0}, 2), std::runtime_error);
}

TEST_CASE("codec files round-trip exactly") {
  ProjectionCodec c = ProjectionCodec::make_projection(32, 0.25, 8, 11);
  c.calibrate_quantizer({{-0.7, 0.9}});
  const std::string path = "codec_test_roundtrip.cscd";
  c.save(path);
  ProjectionCodec back = ProjectionCodec::load(path);
  CHECK(back.m() == c.m());
  CHECK(back.n() == c.n());
  CHECK(back.bits() == c.bits());
  CHECK(back.seed() == c.seed());
  CHECK(back.q_lo() == c.q_lo());
  CHECK(back.q_hi() == c.q_hi());
  CHECK(std::memcmp(back.matrix().data(), c.matrix().data(),
                    c.matrix().size() * sizeof(double)) == 0);
  std::remove(path.c_str());

  const std::string junk = "codec_test_junk.cscd";
  std::ofstream(junk) << "not a codec";
  CHECK_THROWS_AS(ProjectionCodec::load(junk), std::runtime_error);
  std::remove(junk.c_str());
}

TEST_CASE("dataset split partitions every index with rounded sizes") {
  SplitIndices s = split_dataset(100000, {0.5, 0.45, 0.05}, 9);
  CHECK(s.train_omega.size() == 50000);
  CHECK(s.train_alpha.size() == 45000);
  CHECK(s.test.size() == 5000);

  std::vector<char> seen(100000, 0);
  for (uint64_t i : s.train_omega) seen[i] += 1;
  for (uint64_t i : s.train_alpha) seen[i] += 1;
  for (uint64_t i : s.test) seen[i] += 1;
  CHECK(std::count(seen.begin(), seen.end(), 1) == 100000);

  // Shuffled, not consecutive ranges.
  bool identity = true;
  for (size_t i = 0; i < s.train_omega.size(); ++i) {
    if (s.train_omega[i] != i) identity = false;
  }
  CHECK(!identity);

  SplitIndices again = split_dataset(100000, {0.5, 0.45, 0.05}, 9);
  CHECK(again.train_omega == s.train_omega);
  CHECK(again.test == s.test);
  SplitIndices other = split_dataset(100000, {0.5, 0.45, 0.05}, 10);
  CHECK(other.train_omega != s.train_omega);

  SplitIndices tiny = split_dataset(2000, {0.4, 0.4, 0.2}, 3);
  CHECK(tiny.train_omega.size() == 800);
  CHECK(tiny.train_alpha.size() == 800);
  CHECK(tiny.test.size() == 400);

  CHECK_THROWS_AS(split_dataset(100, {0.5, 0.5, 0.5}, 1), std::runtime_error);
  CHECK_THROWS_AS(split_dataset(100, {1.0, 0.0, 0.0}, 1), std::runtime_error);
}
