// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csinas/bigint.hpp"
#include "csinas/candidate_ops.hpp"
#include "csinas/data.hpp"
#include "csinas/genotype.hpp"

namespace csinas {

struct ArchitectureConfig {
  Genotype genotype;
  int n_cell = 2;
  int width = 7;  // evaluation cell width; independent of the search width
  bool residual = true;
  double cr = 0.25;
  int bits = 8;
  double lr = 1e-3;
  double lr_decay = 0.97;
  int e_train = 200;
  int batch = 100;
  bool op_relu = true;
  uint64_t seed = 1;

  void validate() const;
};

// Discrete decoder built from a genotype: dense(m -> 2*n_t*n_c) -> stem conv
// -> n_cell cells -> head conv + sigmoid. Each cell consumes the two previous
// cell outputs (the stem fills both slots for the first cell), sums its two
// branch ops per node, concatenates the inner nodes through a 1x1 conv, adds
// the residual from the k-1 input when enabled, and applies ReLU. Cells own
// independent parameters.
class SubNetwork {
 public:
  SubNetwork(const ArchitectureConfig& cfg, int n_t, int n_c, int m, Rng& init_rng);

  Tensor forward(Tape& tape, const Tensor& input);

  std::vector<Tensor> params() const;
  // Stable name -> tensor listing; the weights file and targeted tests key on it.
  std::vector<std::pair<std::string, Tensor>> named_params() const;

  void save_weights(const std::string& path) const;
  void load_weights(const std::string& path);

  const ArchitectureConfig& config() const { return cfg_; }

 private:
  Tensor cell_forward(Tape& tape, int cell, const Tensor& prev2, const Tensor& prev1);

  ArchitectureConfig cfg_;
  int n_t_, n_c_, m_;
  Tensor dense_w_, dense_b_;
  Tensor stem_k_, stem_b_;
  Tensor head_k_, head_b_;
  struct Cell {
    std::vector<std::array<OperatorInstance, 2>> node_ops;
    Tensor proj_k, proj_b;
  };
  std::vector<Cell> cells_;
};

struct EvalOutcome {
  double nmse_linear;
  double nmse_db;
  std::vector<double> curve;  // mean train loss per epoch
  int epochs_run;
  double seconds;  // wall clock; the one nondeterministic field
};

// Adam training on the union train split, then NMSE on the test split.
EvalOutcome train_from_scratch(SubNetwork& net, const DecoderData& data,
                               const std::vector<uint64_t>& train_idx,
                               const std::vector<uint64_t>& test_idx);

struct CandidateOutcome {
  Genotype genotype;
  EvalOutcome outcome;
  int64_t cell_flops;
  int64_t cell_params;
  uint64_t seed;  // derived training seed for this candidate
};

struct SelectionResult {
  std::vector<CandidateOutcome> rows;  // one per candidate, input order
  int best_index;                      // argmin of NMSE over rows
};

// Evaluation stage: retrain every candidate from scratch (seed derived from
// the base seed and the genotype) and pick the test-NMSE argmin. `jobs` caps
// concurrent trainings. A non-empty weights_dir saves each trained network to
// <weights_dir>/cand<i>.cswt.
SelectionResult select_best(const std::vector<Genotype>& candidates, const CsiDataset& dataset,
                            const ProjectionCodec& codec, const ArchitectureConfig& base,
                            const std::vector<uint64_t>& train_idx,
                            const std::vector<uint64_t>& test_idx, int jobs = 1,
                            const std::string& weights_dir = "");

void save_eval_report(const SelectionResult& sel, const std::string& path);

struct CellComplexity {
  int64_t flops;   // 2*MACs, full same-padding count
  int64_t params;  // including biases
};

// Branch operators plus the concat(N*c) -> c 1x1 projection at spatial h x w.
CellComplexity cell_complexity(const Genotype& g, int c, int h, int w);

// Number of distinct cells: prod_{k=0}^{N-1} |O|^2 * C(k+2, 2).
BigUint cell_space_size(int num_ops, int nodes);
// Unconstrained graph count over the same node budget: |O|^{2N} * 2^{C(2N,2)}.
BigUint global_space_size(int num_ops, int nodes);

}  // namespace csinas
