// SPDX-License-Identifier: Apache-2.0
#include "csinas/evalnet.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "csinas/optim.hpp"

namespace csinas {

void ArchitectureConfig::validate() const {
  std::string reason;
  if (!genotype_is_member(genotype, static_cast<int>(genotype.nodes.size()), genotype.op_set,
                          &reason)) {
    throw std::runtime_error("architecture config: invalid genotype: " + reason);
  }
  if (n_cell < 1) throw std::runtime_error("architecture config: n_cell must be >= 1");
  if (width < 1) throw std::runtime_error("architecture config: width must be >= 1");
  if (!(cr > 0.0 && cr < 1.0)) throw std::runtime_error("architecture config: cr must lie in (0,1)");
  if (bits < 1 || bits > 32) throw std::runtime_error("architecture config: bits must be in [1,32]");
  if (e_train < 1) throw std::runtime_error("architecture config: e_train must be >= 1");
  if (batch < 1) throw std::runtime_error("architecture config: batch must be >= 1");
  if (!(lr > 0.0)) throw std::runtime_error("architecture config: lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw std::runtime_error("architecture config: lr_decay must lie in (0,1]");
  }
}

namespace {

Tensor he_conv_init(const Shape& s, Rng& rng) {
  double fan_in = static_cast<double>(s[1]) * s[2] * s[3];
  return tensor_randn(s, rng, std::sqrt(2.0 / fan_in), true);
}

}  // namespace

SubNetwork::SubNetwork(const ArchitectureConfig& cfg, int n_t, int n_c, int m, Rng& init_rng)
    : cfg_(cfg), n_t_(n_t), n_c_(n_c), m_(m) {
  cfg_.validate();
  const int c = cfg_.width;
  const int nodes = static_cast<int>(cfg_.genotype.nodes.size());
  const int n_flat = 2 * n_t_ * n_c_;
  dense_w_ = tensor_randn({n_flat, m_}, init_rng, std::sqrt(2.0 / m_), true);
  dense_b_ = tensor_zeros({n_flat}, true);
  stem_k_ = he_conv_init({c, 2, 3, 3}, init_rng);
  stem_b_ = tensor_zeros({c}, true);
  head_k_ = he_conv_init({2, c, 3, 3}, init_rng);
  head_b_ = tensor_zeros({2}, true);
  OpOptions op_opts;
  op_opts.post_relu = cfg_.op_relu;
  for (int k = 0; k < cfg_.n_cell; ++k) {
    Cell cell;
    for (int j = 0; j < nodes; ++j) {
      const auto& node = cfg_.genotype.nodes[static_cast<size_t>(j)];
      cell.node_ops.push_back(
          {OperatorInstance::create(node.branches[0].op, c, init_rng, op_opts),
           OperatorInstance::create(node.branches[1].op, c, init_rng, op_opts)});
    }
    cell.proj_k = he_conv_init({c, nodes * c, 1, 1}, init_rng);
    cell.proj_b = tensor_zeros({c}, true);
    cells_.push_back(std::move(cell));
  }
}

Tensor SubNetwork::cell_forward(Tape& tape, int cell, const Tensor& prev2, const Tensor& prev1) {
  const Cell& cw = cells_[static_cast<size_t>(cell)];
  std::vector<Tensor> states = {prev2, prev1};
  std::vector<Tensor> inner;
  for (size_t j = 0; j < cw.node_ops.size(); ++j) {
    const auto& node = cfg_.genotype.nodes[j];
    Tensor b0 = cw.node_ops[j][0].apply(
        tape, states[static_cast<size_t>(node.branches[0].input)]);
    Tensor b1 = cw.node_ops[j][1].apply(
        tape, states[static_cast<size_t>(node.branches[1].input)]);
    Tensor sum = add(tape, b0, b1);
    states.push_back(sum);
    inner.push_back(sum);
  }
  Tensor cat = concat_channels(tape, inner);
  Tensor body = conv2d(tape, cat, cw.proj_k, cw.proj_b);
  if (cfg_.residual) body = add(tape, body, prev1);
  return relu(tape, body);
}

Tensor SubNetwork::forward(Tape& tape, const Tensor& input) {
  if (input->shape.size() != 2 || input->shape[1] != m_) {
    throw std::runtime_error("subnetwork forward: expected input [b," + std::to_string(m_) +
                             "], got " + shape_str(input->shape));
  }
  const int b = input->shape[0];
  Tensor flat = linear(tape, input, dense_w_, dense_b_);
  Tensor grid = reshape(tape, flat, {b, 2, n_t_, n_c_});
  Tensor stem = conv2d(tape, grid, stem_k_, stem_b_);
  Tensor prev2 = stem, prev1 = stem;
  for (int k = 0; k < cfg_.n_cell; ++k) {
    Tensor out = cell_forward(tape, k, prev2, prev1);
    prev2 = prev1;
    prev1 = out;
  }
  Tensor head = conv2d(tape, prev1, head_k_, head_b_);
  return sigmoid(tape, head);
}

std::vector<Tensor> SubNetwork::params() const {
  std::vector<Tensor> p;
  for (const auto& [name, t] : named_params()) {
    (void)name;
    p.push_back(t);
  }
  return p;
}

std::vector<std::pair<std::string, Tensor>> SubNetwork::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("dense.w", dense_w_);
  out.emplace_back("dense.b", dense_b_);
  out.emplace_back("stem.k", stem_k_);
  out.emplace_back("stem.b", stem_b_);
  for (size_t k = 0; k < cells_.size(); ++k) {
    const std::string ck = "cell" + std::to_string(k);
    for (size_t j = 0; j < cells_[k].node_ops.size(); ++j) {
      for (int b = 0; b < 2; ++b) {
        const auto& ps = cells_[k].node_ops[j][static_cast<size_t>(b)].params();
        for (size_t p = 0; p < ps.size(); ++p) {
          out.emplace_back(ck + ".node" + std::to_string(j) + ".branch" + std::to_string(b) +
                               ".param" + std::to_string(p),
                           ps[p]);
        }
      }
    }
    out.emplace_back(ck + ".proj.k", cells_[k].proj_k);
    out.emplace_back(ck + ".proj.b", cells_[k].proj_b);
  }
  out.emplace_back("head.k", head_k_);
  out.emplace_back("head.b", head_b_);
  return out;
}

namespace {

constexpr char kWeightsMagic[4] = {'C', 'S', 'W', 'T'};
constexpr uint32_t kWeightsVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
void get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("weights file: unexpected end of file");
}

}  // namespace

void SubNetwork::save_weights(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_weights: cannot open " + path);
  f.write(kWeightsMagic, 4);
  put(f, kWeightsVersion);
  auto named = named_params();
  put(f, static_cast<uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(f, static_cast<uint32_t>(t->shape.size()));
    for (int d : t->shape) put(f, static_cast<int32_t>(d));
    f.write(reinterpret_cast<const char*>(t->value.data()),
            static_cast<std::streamsize>(t->value.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("save_weights: write failed for " + path);
}

void SubNetwork::load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_weights: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw std::runtime_error("load_weights: " + path + " is not a weights file");
  }
  uint32_t version;
  get(f, version);
  if (version != kWeightsVersion) {
    throw std::runtime_error("load_weights: unsupported version " + std::to_string(version));
  }
  uint32_t count;
  get(f, count);
  auto named = named_params();
  if (count != named.size()) {
    throw std::runtime_error("load_weights: tensor count mismatch in " + path);
  }
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len;
    get(f, name_len);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t ndim;
    get(f, ndim);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      int32_t v;
      get(f, v);
      shape[d] = v;
    }
    if (name != named[i].first || shape != named[i].second->shape) {
      throw std::runtime_error("load_weights: tensor " + name +
                               " does not match the network layout");
    }
    f.read(reinterpret_cast<char*>(named[i].second->value.data()),
           static_cast<std::streamsize>(named[i].second->value.size() * sizeof(double)));
    if (!f) throw std::runtime_error("load_weights: unexpected end of file");
  }
}

EvalOutcome train_from_scratch(SubNetwork& net, const DecoderData& data,
                               const std::vector<uint64_t>& train_idx,
                               const std::vector<uint64_t>& test_idx) {
  if (train_idx.empty() || test_idx.empty()) {
    throw std::runtime_error("train_from_scratch: empty index list");
  }
  const ArchitectureConfig& cfg = net.config();
  const auto t0 = std::chrono::steady_clock::now();
  Adam opt(net.params(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.lr_decay});
  Rng batch_rng(hash_str(cfg.seed, "batches"));
  std::vector<uint64_t> idx = train_idx;
  EvalOutcome out;
  const int64_t n = static_cast<int64_t>(idx.size());
  for (int epoch = 0; epoch < cfg.e_train; ++epoch) {
    opt.set_epoch(epoch);
    batch_rng.shuffle(idx);
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (int64_t at = 0; at < n; at += cfg.batch) {
      const int64_t stop = std::min<int64_t>(at + cfg.batch, n);
      Tensor in, tgt;
      gather_batch(data, idx, at, stop, in, tgt);
      Tape tape;
      opt.zero_grad();
      Tensor loss = mse(tape, net.forward(tape, in), tgt);
      tape.backward(loss);
      opt.step();
      loss_sum += loss->value[0];
      ++batches;
    }
    out.curve.push_back(loss_sum / static_cast<double>(batches));
  }
  NmseResult val = eval_nmse([&](Tape& tape, const Tensor& in) { return net.forward(tape, in); },
                             data, test_idx, cfg.batch);
  out.nmse_linear = val.linear;
  out.nmse_db = val.db;
  out.epochs_run = cfg.e_train;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SelectionResult select_best(const std::vector<Genotype>& candidates, const CsiDataset& dataset,
                            const ProjectionCodec& codec, const ArchitectureConfig& base,
                            const std::vector<uint64_t>& train_idx,
                            const std::vector<uint64_t>& test_idx, int jobs,
                            const std::string& weights_dir) {
  if (candidates.empty()) throw std::runtime_error("select_best: no candidates");
  if (jobs < 1) jobs = 1;
  DecoderData data = make_decoder_data(dataset, codec);
  SelectionResult sel;
  sel.rows.resize(candidates.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= candidates.size()) return;
      ArchitectureConfig cfg = base;
      cfg.genotype = candidates[i];
      cfg.genotype.canonicalize();
      cfg.seed = hash_str(base.seed, cfg.genotype.key().c_str());
      Rng init_rng(hash_str(cfg.seed, "init"));
      SubNetwork net(cfg, dataset.n_t, dataset.n_c, codec.m(), init_rng);
      CandidateOutcome row;
      row.genotype = cfg.genotype;
      row.seed = cfg.seed;
      row.outcome = train_from_scratch(net, data, train_idx, test_idx);
      if (!weights_dir.empty()) {
        net.save_weights(weights_dir + "/cand" + std::to_string(i) + ".cswt");
      }
      CellComplexity cx = cell_complexity(cfg.genotype, cfg.width, dataset.n_t, dataset.n_c);
      row.cell_flops = cx.flops;
      row.cell_params = cx.params;
      sel.rows[i] = std::move(row);
    }
  };
  if (jobs == 1 || candidates.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int nw = std::min<int>(jobs, static_cast<int>(candidates.size()));
    pool.reserve(static_cast<size_t>(nw));
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  sel.best_index = 0;
  for (size_t i = 1; i < sel.rows.size(); ++i) {
    if (sel.rows[i].outcome.nmse_linear < sel.rows[sel.best_index].outcome.nmse_linear) {
      sel.best_index = static_cast<int>(i);
    }
  }
  return sel;
}

void save_eval_report(const SelectionResult& sel, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_eval_report: cannot open " + path);
  f << "genotype_id,nmse_linear,nmse_db,cell_flops,cell_params,epochs,seconds\n";
  char buf[64];
  for (const auto& row : sel.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.outcome.nmse_linear);
    f << row.genotype.key() << "," << buf << "," << format_db(row.outcome.nmse_db) << ","
      << row.cell_flops << "," << row.cell_params << "," << row.outcome.epochs_run << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", row.outcome.seconds);
    f << buf << "\n";
  }
  if (!f) throw std::runtime_error("save_eval_report: write failed for " + path);
}

CellComplexity cell_complexity(const Genotype& g, int c, int h, int w) {
  if (c < 1 || h < 1 || w < 1) throw std::runtime_error("cell_complexity: non-positive size");
  const int64_t nodes = static_cast<int64_t>(g.nodes.size());
  CellComplexity cx{0, 0};
  for (const auto& node : g.nodes) {
    for (const auto& br : node.branches) {
      cx.flops += op_flops(br.op, c, h, w);
      cx.params += op_param_count(br.op, c);
    }
  }
  // concat(nodes*c) -> c pointwise projection
  cx.flops += 2 * (nodes * c) * c * static_cast<int64_t>(h) * w;
  cx.params += nodes * c * c + c;
  return cx;
}

BigUint cell_space_size(int num_ops, int nodes) {
  if (num_ops < 1 || nodes < 1) throw std::runtime_error("cell_space_size: arguments must be >= 1");
  BigUint total(1);
  const uint64_t ops2 = static_cast<uint64_t>(num_ops) * static_cast<uint64_t>(num_ops);
  for (int k = 0; k < nodes; ++k) {
    const uint64_t pairs = static_cast<uint64_t>(k + 2) * (k + 1) / 2;  // C(k+2, 2)
    total *= ops2;
    total *= pairs;
  }
  return total;
}

BigUint global_space_size(int num_ops, int nodes) {
  if (num_ops < 1 || nodes < 1) {
    throw std::runtime_error("global_space_size: arguments must be >= 1");
  }
  const uint64_t n2 = 2 * static_cast<uint64_t>(nodes);
  BigUint total = BigUint::pow(static_cast<uint64_t>(num_ops), n2);
  uint64_t edges = n2 * (n2 - 1) / 2;  // C(2N, 2)
  for (; edges >= 32; edges -= 32) total *= (uint64_t{1} << 32);
  if (edges > 0) total *= (uint64_t{1} << edges);
  return total;
}

}  // namespace csinas
