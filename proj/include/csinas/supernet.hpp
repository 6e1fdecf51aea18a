// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "csinas/candidate_ops.hpp"
#include "csinas/data.hpp"
#include "csinas/genotype.hpp"
#include "csinas/optim.hpp"

namespace csinas {

struct SearchConfig {
  double cr = 0.25;
  int bits = 8;
  int n_cell = 2;
  int nodes = 3;
  int width = 8;  // supernet cell width c
  std::array<double, 3> split = {0.5, 0.45, 0.05};
  int e_warm_up = 20;
  int e_search = 400;
  std::vector<OpKind> op_set = all_op_kinds();
  double arch_lr = 6e-4;
  double param_lr = 3e-4;
  double param_lr_decay = 0.97;
  double weight_decay = 3e-4;  // lambda on the architecture weights
  int e_train = 200;           // passed through to the evaluation stage
  int e_start_record = 20;
  int m_record = 20;
  int k_partial = 4;
  int batch = 100;
  int patience = 100;
  bool op_relu = true;
  uint64_t seed = 1;

  void validate() const;
};

// Continuous-relaxation decoder: every edge carries all candidate ops,
// softmax(alpha)-mixed over a random 1/K channel subset, with softmax(beta)
// edge weights at each node. The cells share alpha/beta and operator
// parameters; only the derived genotype survives to the evaluation stage.
class SuperNet {
 public:
  SuperNet(const SearchConfig& cfg, int n_t, int n_c, int m, Rng& init_rng);

  // input [b, m] -> reconstruction [b, 2, n_t, n_c]. The rng drives the
  // per-edge partial-channel subsets and must advance identically on runs
  // that should reproduce.
  Tensor forward(Tape& tape, const Tensor& input, Rng& pc_rng);

  // Mixture over one edge's ops on a 1/K channel subset of x; exposed for
  // direct testing against the plain DARTS mixture at K=1.
  Tensor mixed_edge(Tape& tape, int edge, const Tensor& x, Rng& pc_rng);

  std::vector<Tensor> omega_params() const;
  std::vector<Tensor> arch_params() const;
  const std::vector<Tensor>& alphas() const { return alpha_; }
  const std::vector<Tensor>& betas() const { return beta_; }

  Genotype derive_genotype() const;

  int num_edges() const { return static_cast<int>(alpha_.size()); }
  int sub_channels() const { return sub_channels_; }

 private:
  Tensor cell_forward(Tape& tape, const Tensor& prev2, const Tensor& prev1, Rng& pc_rng);

  SearchConfig cfg_;
  int n_t_, n_c_, m_;
  int sub_channels_;
  Tensor dense_w_, dense_b_;
  Tensor stem_k_, stem_b_;
  Tensor proj_k_, proj_b_;  // concat(N*c) -> c
  Tensor head_k_, head_b_;
  // Edge order: node 0 inputs 0,1; node 1 inputs 0,1,2; ... alpha_[e] has one
  // logit per op in cfg.op_set; beta_[j] one logit per incoming edge.
  std::vector<std::vector<OperatorInstance>> edge_ops_;
  std::vector<Tensor> alpha_;
  std::vector<Tensor> beta_;
};

struct CandidateRecord {
  Genotype genotype;
  double nmse_db;  // supernet validation NMSE when recorded
  int epoch;
};

struct SearchLogRow {
  int epoch;
  bool warmup;
  double train_loss;
  double nmse_db;
  bool recorded;
};

struct SearchResult {
  std::vector<CandidateRecord> candidates;
  std::vector<SearchLogRow> log;
  Genotype final_genotype;
  double best_nmse_db;
  int epochs_run;
};

// Algorithm: warm-up epochs train omega only; afterwards every omega batch is
// preceded by one alpha/beta step on the alpha split. Each epoch ends with a
// supernet NMSE probe on the test split; strict improvements (against a 0 dB
// starting bar) are recorded into the candidate set once past e_start_record,
// capped at m_record, duplicates skipped. Stops early after `patience`
// improvement-free epochs.
SearchResult run_search(const SearchConfig& cfg, const CsiDataset& dataset,
                        const ProjectionCodec& codec, const SplitIndices& split);

void save_search_log(const std::vector<SearchLogRow>& log, const std::string& path);

}  // namespace csinas
