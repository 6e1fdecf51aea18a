// SPDX-License-Identifier: Apache-2.0
#include "csinas/data.hpp"

#include <stdexcept>

#include "csinas/parallel.hpp"

namespace csinas {

DecoderData make_decoder_data(const CsiDataset& ds, const ProjectionCodec& codec) {
  if (!codec.calibrated()) throw std::runtime_error("make_decoder_data: codec not calibrated");
  const int64_t slen = ds.sample_len();
  if (codec.n() != slen) {
    throw std::runtime_error("make_decoder_data: codec n=" + std::to_string(codec.n()) +
                             " does not match sample length " + std::to_string(slen));
  }
  DecoderData d;
  d.n_t = ds.n_t;
  d.n_c = ds.n_c;
  d.m = codec.m();
  d.lo = ds.lo;
  d.hi = ds.hi;
  d.count = ds.count;
  d.inputs.resize(ds.count * static_cast<uint64_t>(d.m));
  d.targets.resize(ds.count * static_cast<uint64_t>(d.target_len()));
  // The feedback leg sees the physical CSI, not the [0,1] storage encoding:
  // the normalization offset would otherwise eat the quantizer range.
  const double span = ds.hi - ds.lo;
  parallel_for(static_cast<int64_t>(ds.count), 64, [&](int64_t b, int64_t e) {
    std::vector<double> vec(static_cast<size_t>(slen));
    for (int64_t i = b; i < e; ++i) {
      const float* s = ds.sample(static_cast<uint64_t>(i));
      for (int64_t j = 0; j < slen; ++j) vec[static_cast<size_t>(j)] = ds.lo + s[j] * span;
      std::vector<double> sd = codec.dequantize(codec.quantize(codec.compress(vec)));
      std::copy(sd.begin(), sd.end(), d.inputs.begin() + i * d.m);
      // (antenna, delay, re/im) -> plane-major (re/im, antenna, delay)
      double* tgt = d.targets.data() + i * d.target_len();
      const int64_t plane = static_cast<int64_t>(d.n_t) * d.n_c;
      for (int64_t a = 0; a < d.n_t; ++a) {
        for (int64_t c = 0; c < d.n_c; ++c) {
          tgt[a * d.n_c + c] = s[(a * d.n_c + c) * 2];
          tgt[plane + a * d.n_c + c] = s[(a * d.n_c + c) * 2 + 1];
        }
      }
    }
  });
  return d;
}

void calibrate_codec(ProjectionCodec& codec, const CsiDataset& ds) {
  const int64_t slen = ds.sample_len();
  if (codec.n() != slen) {
    throw std::runtime_error("calibrate_codec: codec n=" + std::to_string(codec.n()) +
                             " does not match sample length " + std::to_string(slen));
  }
  std::vector<std::vector<double>> codewords;
  codewords.reserve(ds.count);
  std::vector<double> vec(static_cast<size_t>(slen));
  const double span = ds.hi - ds.lo;
  for (uint64_t i = 0; i < ds.count; ++i) {
    const float* s = ds.sample(i);
    for (int64_t j = 0; j < slen; ++j) vec[static_cast<size_t>(j)] = ds.lo + s[j] * span;
    codewords.push_back(codec.compress(vec));
  }
  codec.calibrate_quantizer(codewords);
}

void gather_batch(const DecoderData& data, const std::vector<uint64_t>& indices, int64_t begin,
                  int64_t end, Tensor& inputs, Tensor& targets) {
  if (begin < 0 || end <= begin || end > static_cast<int64_t>(indices.size())) {
    throw std::runtime_error("gather_batch: bad slice");
  }
  const int64_t b = end - begin;
  const int64_t tlen = data.target_len();
  inputs = tensor_zeros({static_cast<int>(b), data.m});
  targets = tensor_zeros({static_cast<int>(b), 2, data.n_t, data.n_c});
  for (int64_t i = 0; i < b; ++i) {
    const uint64_t s = indices[static_cast<size_t>(begin + i)];
    if (s >= data.count) throw std::runtime_error("gather_batch: sample index out of range");
    std::copy_n(data.inputs.data() + s * static_cast<uint64_t>(data.m), data.m,
                inputs->value.data() + i * data.m);
    std::copy_n(data.targets.data() + s * static_cast<uint64_t>(tlen), tlen,
                targets->value.data() + i * tlen);
  }
}

}  // namespace csinas
