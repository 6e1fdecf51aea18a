// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "csinas/channel.hpp"
#include "csinas/codec.hpp"
#include "csinas/tensor.hpp"

namespace csinas {

// Dataset pushed once through the feedback leg: decoder inputs are the
// dequantized codewords, targets the normalized CSI in (re/im, antenna, delay)
// plane order. Built once per (dataset, codec) pair; training only gathers.
struct DecoderData {
  int n_t = 0, n_c = 0, m = 0;
  double lo = 0.0, hi = 0.0;          // dataset normalization constants
  std::vector<double> inputs;         // count x m
  std::vector<double> targets;        // count x (2 * n_t * n_c)
  uint64_t count = 0;

  int64_t target_len() const { return static_cast<int64_t>(2) * n_t * n_c; }
};

DecoderData make_decoder_data(const CsiDataset& ds, const ProjectionCodec& codec);

// Fits the quantizer range to the codewords of every sample in the dataset.
void calibrate_codec(ProjectionCodec& codec, const CsiDataset& ds);

// Collects the listed samples into batch tensors: inputs [b, m] and targets
// [b, 2, n_t, n_c].
void gather_batch(const DecoderData& data, const std::vector<uint64_t>& indices, int64_t begin,
                  int64_t end, Tensor& inputs, Tensor& targets);

// NMSE of a decoder over the listed samples, computed on denormalized values.
// Net is any callable (Tape&, const Tensor&) -> Tensor run under no-grad.
template <typename Net>
NmseResult eval_nmse(Net&& net, const DecoderData& data, const std::vector<uint64_t>& indices,
                     int batch) {
  if (indices.empty()) throw std::runtime_error("eval_nmse: empty index list");
  const int64_t tlen = data.target_len();
  std::vector<double> truth, pred;
  truth.reserve(indices.size() * static_cast<size_t>(tlen));
  pred.reserve(indices.size() * static_cast<size_t>(tlen));
  const double span = data.hi - data.lo;
  Tape tape;
  NoGradGuard off(tape);
  for (int64_t at = 0; at < static_cast<int64_t>(indices.size()); at += batch) {
    const int64_t stop = std::min<int64_t>(at + batch, static_cast<int64_t>(indices.size()));
    Tensor in, tgt;
    gather_batch(data, indices, at, stop, in, tgt);
    Tensor out = net(tape, in);
    if (out->shape != tgt->shape) {
      throw std::runtime_error("eval_nmse: network output shape " + shape_str(out->shape) +
                               " does not match target " + shape_str(tgt->shape));
    }
    for (double v : tgt->value) truth.push_back(data.lo + v * span);
    for (double v : out->value) pred.push_back(data.lo + v * span);
  }
  return nmse(truth, pred, tlen);
}

}  // namespace csinas
