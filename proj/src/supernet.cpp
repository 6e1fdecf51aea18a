// SPDX-License-Identifier: Apache-2.0
#include "csinas/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace csinas {

void SearchConfig::validate() const {
  if (!(cr > 0.0 && cr < 1.0)) throw std::runtime_error("search config: cr must lie in (0,1)");
  if (bits < 1 || bits > 32) throw std::runtime_error("search config: bits must be in [1,32]");
  if (n_cell < 1) throw std::runtime_error("search config: n_cell must be >= 1");
  if (nodes < 1) throw std::runtime_error("search config: nodes must be >= 1");
  if (width < 1) throw std::runtime_error("search config: width must be >= 1");
  if (k_partial < 1) throw std::runtime_error("search config: k_partial must be >= 1");
  if (batch < 1) throw std::runtime_error("search config: batch must be >= 1");
  if (e_search < 1) throw std::runtime_error("search config: e_search must be >= 1");
  if (e_warm_up < 0 || e_warm_up >= e_search) {
    throw std::runtime_error("search config: e_warm_up must lie in [0, e_search)");
  }
  if (e_start_record >= e_search) {
    throw std::runtime_error("search config: e_start_record must be < e_search");
  }
  if (m_record < 1) throw std::runtime_error("search config: m_record must be >= 1");
  if (patience < 1) throw std::runtime_error("search config: patience must be >= 1");
  if (e_train < 1) throw std::runtime_error("search config: e_train must be >= 1");
  if (op_set.empty()) throw std::runtime_error("search config: empty op set");
  std::set<OpKind> seen;
  bool has_real = false;
  for (OpKind k : op_set) {
    if (!seen.insert(k).second) throw std::runtime_error("search config: duplicate op in op set");
    if (k != OpKind::zero) has_real = true;
  }
  if (!has_real) throw std::runtime_error("search config: op set needs a non-zero op");
  double sum = 0.0;
  for (double r : split) {
    if (!(r > 0.0)) throw std::runtime_error("search config: split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error("search config: split ratios must sum to 1");
  }
}

namespace {

std::vector<double> softmax_values(const std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double denom = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    denom += out[i];
  }
  for (double& x : out) x /= denom;
  return out;
}

Tensor he_conv_init(const Shape& s, Rng& rng) {
  double fan_in = static_cast<double>(s[1]) * s[2] * s[3];
  return tensor_randn(s, rng, std::sqrt(2.0 / fan_in), true);
}

}  // namespace

SuperNet::SuperNet(const SearchConfig& cfg, int n_t, int n_c, int m, Rng& init_rng)
    : cfg_(cfg), n_t_(n_t), n_c_(n_c), m_(m) {
  cfg_.validate();
  // Keep the op vocabulary in enum order; argmax tie-breaking depends on it.
  std::sort(cfg_.op_set.begin(), cfg_.op_set.end());
  const int c = cfg_.width;
  sub_channels_ = std::max(1, c / cfg_.k_partial);
  const int n_flat = 2 * n_t_ * n_c_;
  dense_w_ = tensor_randn({n_flat, m_}, init_rng, std::sqrt(2.0 / m_), true);
  dense_b_ = tensor_zeros({n_flat}, true);
  stem_k_ = he_conv_init({c, 2, 3, 3}, init_rng);
  stem_b_ = tensor_zeros({c}, true);
  proj_k_ = he_conv_init({c, cfg_.nodes * c, 1, 1}, init_rng);
  proj_b_ = tensor_zeros({c}, true);
  head_k_ = he_conv_init({2, c, 3, 3}, init_rng);
  head_b_ = tensor_zeros({2}, true);
  OpOptions op_opts;
  op_opts.post_relu = cfg_.op_relu;
  for (int j = 0; j < cfg_.nodes; ++j) {
    for (int i = 0; i < j + 2; ++i) {
      std::vector<OperatorInstance> ops;
      ops.reserve(cfg_.op_set.size());
      for (OpKind k : cfg_.op_set) {
        ops.push_back(OperatorInstance::create(k, sub_channels_, init_rng, op_opts));
      }
      edge_ops_.push_back(std::move(ops));
      alpha_.push_back(tensor_zeros({static_cast<int>(cfg_.op_set.size())}, true));
    }
    beta_.push_back(tensor_zeros({j + 2}, true));
  }
}

Tensor SuperNet::mixed_edge(Tape& tape, int edge, const Tensor& x, Rng& pc_rng) {
  if (edge < 0 || edge >= num_edges()) throw std::runtime_error("mixed_edge: edge out of range");
  const int c = cfg_.width;
  const int msub = sub_channels_;
  Tensor active = x;
  std::vector<int> idx_active, idx_passive;
  if (msub < c) {
    idx_active = pc_rng.sample_without_replacement(c, msub);
    std::sort(idx_active.begin(), idx_active.end());
    std::vector<char> is_active(static_cast<size_t>(c), 0);
    for (int i : idx_active) is_active[static_cast<size_t>(i)] = 1;
    for (int i = 0; i < c; ++i) {
      if (!is_active[static_cast<size_t>(i)]) idx_passive.push_back(i);
    }
    active = select_channels(tape, x, idx_active);
  }
  std::vector<Tensor> branch_out;
  branch_out.reserve(edge_ops_[static_cast<size_t>(edge)].size());
  for (const auto& op : edge_ops_[static_cast<size_t>(edge)]) {
    branch_out.push_back(op.apply(tape, active));
  }
  Tensor weights = softmax1d(tape, alpha_[static_cast<size_t>(edge)]);
  Tensor mixed = weighted_sum(tape, branch_out, weights);
  Tensor recombined = mixed;
  if (msub < c) {
    Tensor passive = select_channels(tape, x, idx_passive);
    recombined = assemble_channels(tape, mixed, idx_active, passive, idx_passive);
  }
  return roll_channels(tape, recombined, msub);
}

Tensor SuperNet::cell_forward(Tape& tape, const Tensor& prev2, const Tensor& prev1, Rng& pc_rng) {
  std::vector<Tensor> states = {prev2, prev1};
  int edge = 0;
  std::vector<Tensor> inner;
  for (int j = 0; j < cfg_.nodes; ++j) {
    std::vector<Tensor> contributions;
    contributions.reserve(static_cast<size_t>(j) + 2);
    for (int i = 0; i < j + 2; ++i) {
      contributions.push_back(mixed_edge(tape, edge++, states[static_cast<size_t>(i)], pc_rng));
    }
    Tensor edge_w = softmax1d(tape, beta_[static_cast<size_t>(j)]);
    Tensor node = weighted_sum(tape, contributions, edge_w);
    states.push_back(node);
    inner.push_back(node);
  }
  Tensor cat = concat_channels(tape, inner);
  Tensor projected = conv2d(tape, cat, proj_k_, proj_b_);
  return relu(tape, projected);
}

Tensor SuperNet::forward(Tape& tape, const Tensor& input, Rng& pc_rng) {
  if (input->shape.size() != 2 || input->shape[1] != m_) {
    throw std::runtime_error("supernet forward: expected input [b," + std::to_string(m_) +
                             "], got " + shape_str(input->shape));
  }
  const int b = input->shape[0];
  Tensor flat = linear(tape, input, dense_w_, dense_b_);
  Tensor grid = reshape(tape, flat, {b, 2, n_t_, n_c_});
  Tensor stem = conv2d(tape, grid, stem_k_, stem_b_);
  Tensor prev2 = stem, prev1 = stem;
  for (int cell = 0; cell < cfg_.n_cell; ++cell) {
    Tensor out = cell_forward(tape, prev2, prev1, pc_rng);
    prev2 = prev1;
    prev1 = out;
  }
  Tensor head = conv2d(tape, prev1, head_k_, head_b_);
  return sigmoid(tape, head);
}

std::vector<Tensor> SuperNet::omega_params() const {
  std::vector<Tensor> p = {dense_w_, dense_b_, stem_k_, stem_b_, proj_k_, proj_b_,
                           head_k_,  head_b_};
  for (const auto& ops : edge_ops_) {
    for (const auto& op : ops) {
      for (const auto& t : op.params()) p.push_back(t);
    }
  }
  return p;
}

std::vector<Tensor> SuperNet::arch_params() const {
  std::vector<Tensor> p = alpha_;
  p.insert(p.end(), beta_.begin(), beta_.end());
  return p;
}

Genotype SuperNet::derive_genotype() const {
  Genotype g;
  g.op_set = cfg_.op_set;
  int edge_base = 0;
  for (int j = 0; j < cfg_.nodes; ++j) {
    const int in_degree = j + 2;
    std::vector<double> beta_w = softmax_values(beta_[static_cast<size_t>(j)]->value);
    struct Scored {
      double score;
      int input;
      OpKind op;
    };
    std::vector<Scored> scored;
    for (int i = 0; i < in_degree; ++i) {
      std::vector<double> alpha_w =
          softmax_values(alpha_[static_cast<size_t>(edge_base + i)]->value);
      // Best non-zero op on this edge; ties fall to the lower op index
      // because the vocabulary is kept in enum order.
      int best = -1;
      for (size_t o = 0; o < cfg_.op_set.size(); ++o) {
        if (cfg_.op_set[o] == OpKind::zero) continue;
        if (best < 0 || alpha_w[o] > alpha_w[static_cast<size_t>(best)]) {
          best = static_cast<int>(o);
        }
      }
      scored.push_back({beta_w[static_cast<size_t>(i)] * alpha_w[static_cast<size_t>(best)], i,
                        cfg_.op_set[static_cast<size_t>(best)]});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.input < b.input;
    });
    GenotypeNode node{};
    node.branches[0] = {scored[0].op, scored[0].input};
    node.branches[1] = {scored[1].op, scored[1].input};
    g.nodes.push_back(node);
    edge_base += in_degree;
  }
  g.canonicalize();
  return g;
}

SearchResult run_search(const SearchConfig& cfg, const CsiDataset& dataset,
                        const ProjectionCodec& codec, const SplitIndices& split) {
  cfg.validate();
  if (split.train_omega.empty() || split.train_alpha.empty() || split.test.empty()) {
    throw std::runtime_error("run_search: empty dataset split");
  }
  DecoderData data = make_decoder_data(dataset, codec);
  Rng init_rng(mix_seed(cfg.seed, hash_str(cfg.seed, "init")));
  SuperNet net(cfg, dataset.n_t, dataset.n_c, codec.m(), init_rng);

  Adam omega_opt(net.omega_params(), {cfg.param_lr, 0.9, 0.999, 1e-8, cfg.param_lr_decay});
  Adam arch_opt(net.arch_params(), {cfg.arch_lr, 0.9, 0.999, 1e-8, 1.0});

  Rng batch_rng(hash_str(cfg.seed, "batches"));
  Rng pc_rng(hash_str(cfg.seed, "partial-channel"));

  std::vector<uint64_t> omega_idx = split.train_omega;
  std::vector<uint64_t> alpha_idx = split.train_alpha;

  SearchResult result;
  result.best_nmse_db = 0.0;  // the recording bar starts at 0 dB
  double best_linear = 1.0;
  std::set<std::string> recorded_keys;
  int since_improve = 0;
  int64_t alpha_cursor = 0;
  batch_rng.shuffle(alpha_idx);

  const int64_t n_omega = static_cast<int64_t>(omega_idx.size());
  for (int epoch = 0; epoch < cfg.e_search; ++epoch) {
    const bool warmup = epoch < cfg.e_warm_up;
    omega_opt.set_epoch(epoch);
    batch_rng.shuffle(omega_idx);
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (int64_t at = 0; at < n_omega; at += cfg.batch) {
      const int64_t stop = std::min<int64_t>(at + cfg.batch, n_omega);
      if (!warmup) {
        // alpha/beta step on the alpha split, omega frozen
        const int64_t remain = static_cast<int64_t>(alpha_idx.size()) - alpha_cursor;
        if (remain < cfg.batch && static_cast<int64_t>(alpha_idx.size()) >= cfg.batch) {
          batch_rng.shuffle(alpha_idx);
          alpha_cursor = 0;
        }
        const int64_t a_stop =
            std::min<int64_t>(alpha_cursor + cfg.batch, static_cast<int64_t>(alpha_idx.size()));
        Tensor a_in, a_tgt;
        gather_batch(data, alpha_idx, alpha_cursor, a_stop, a_in, a_tgt);
        alpha_cursor = a_stop % static_cast<int64_t>(alpha_idx.size());
        Tape tape;
        arch_opt.zero_grad();
        Tensor loss = mse(tape, net.forward(tape, a_in, pc_rng), a_tgt);
        tape.backward(loss);
        // L2 pull of the regularizer on the architecture weights
        for (const auto& p : arch_opt.params()) {
          p->ensure_grad();
          for (size_t i = 0; i < p->value.size(); ++i) {
            p->grad[i] += 2.0 * cfg.weight_decay * p->value[i];
          }
        }
        arch_opt.step();
      }
      Tensor in, tgt;
      gather_batch(data, omega_idx, at, stop, in, tgt);
      Tape tape;
      omega_opt.zero_grad();
      Tensor loss = mse(tape, net.forward(tape, in, pc_rng), tgt);
      tape.backward(loss);
      omega_opt.step();
      loss_sum += loss->value[0];
      ++batches;
    }
    // Fresh probe stream each epoch: the NMSE readings that gate recording all
    // see the same channel subsets, so they are comparable across epochs.
    Rng probe_rng(hash_str(cfg.seed, "probe"));
    NmseResult val = eval_nmse(
        [&](Tape& tape, const Tensor& in) { return net.forward(tape, in, probe_rng); }, data,
        split.test, cfg.batch);
    bool recorded = false;
    if (val.linear < best_linear) {
      best_linear = val.linear;
      result.best_nmse_db = val.db;
      since_improve = 0;
      if (epoch > cfg.e_start_record &&
          static_cast<int>(result.candidates.size()) < cfg.m_record) {
        Genotype g = net.derive_genotype();
        if (recorded_keys.insert(g.key()).second) {
          result.candidates.push_back({g, val.db, epoch});
          recorded = true;
        }
      }
    } else {
      ++since_improve;
    }
    result.log.push_back({epoch, warmup, loss_sum / static_cast<double>(batches), val.db,
                          recorded});
    result.epochs_run = epoch + 1;
    if (since_improve >= cfg.patience) break;
  }
  result.final_genotype = net.derive_genotype();
  return result;
}

void save_search_log(const std::vector<SearchLogRow>& log, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_search_log: cannot open " + path);
  f << "epoch,phase,train_loss,supernet_nmse_db,recorded\n";
  char buf[64];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.train_loss);
    f << row.epoch << "," << (row.warmup ? "warmup" : "search") << "," << buf << ","
      << format_db(row.nmse_db) << "," << (row.recorded ? 1 : 0) << "\n";
  }
  if (!f) throw std::runtime_error("save_search_log: write failed for " + path);
}

}  // namespace csinas
