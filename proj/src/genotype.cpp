// SPDX-License-Identifier: Apache-2.0
#include "csinas/genotype.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace csinas {

using nlohmann::json;

void Genotype::canonicalize() {
  for (auto& node : nodes) {
    auto lt = [](const GenotypeBranch& a, const GenotypeBranch& b) {
      if (a.input != b.input) return a.input < b.input;
      return static_cast<int>(a.op) < static_cast<int>(b.op);
    };
    if (lt(node.branches[1], node.branches[0])) std::swap(node.branches[0], node.branches[1]);
  }
}

std::string Genotype::key() const {
  Genotype g = *this;
  g.canonicalize();
  std::string k = "n" + std::to_string(g.num_nodes());
  for (const auto& node : g.nodes) {
    for (const auto& br : node.branches) {
      k += "|";
      k += op_name(br.op);
      k += "@" + std::to_string(br.input);
    }
  }
  return k;
}

std::string Genotype::to_json() const {
  json j;
  j["version"] = version;
  json ops = json::array();
  for (OpKind k : op_set) ops.push_back(op_name(k));
  j["op_set"] = ops;
  j["num_nodes"] = num_nodes();
  json nodes_j = json::array();
  for (const auto& node : nodes) {
    json n = json::array();
    for (const auto& br : node.branches) {
      n.push_back(json::array({op_name(br.op), br.input}));
    }
    nodes_j.push_back(n);
  }
  j["nodes"] = nodes_j;
  return j.dump(2) + "\n";
}

Genotype Genotype::from_json(const std::string& text) {
  json j = json::parse(text);
  Genotype g;
  g.version = j.at("version").get<int>();
  if (g.version != 1) {
    throw std::runtime_error("genotype: unsupported version " + std::to_string(g.version));
  }
  for (const auto& name : j.at("op_set")) {
    auto k = op_from_name(name.get<std::string>());
    if (!k) throw std::runtime_error("genotype: unknown op name '" + name.get<std::string>() + "'");
    g.op_set.push_back(*k);
  }
  const int declared = j.at("num_nodes").get<int>();
  for (const auto& node_j : j.at("nodes")) {
    GenotypeNode node{};
    if (node_j.size() != 2) throw std::runtime_error("genotype: each node needs two branches");
    for (size_t b = 0; b < 2; ++b) {
      const auto& br = node_j.at(b);
      auto k = op_from_name(br.at(0).get<std::string>());
      if (!k) {
        throw std::runtime_error("genotype: unknown op name '" + br.at(0).get<std::string>() + "'");
      }
      node.branches[b] = {*k, br.at(1).get<int>()};
    }
    g.nodes.push_back(node);
  }
  if (declared != g.num_nodes()) {
    throw std::runtime_error("genotype: num_nodes disagrees with node list length");
  }
  return g;
}

bool genotype_is_member(const Genotype& g, int expected_nodes, const std::vector<OpKind>& op_set,
                        std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  if (g.num_nodes() != expected_nodes) {
    return fail("node count " + std::to_string(g.num_nodes()) + " does not match space N=" +
                std::to_string(expected_nodes));
  }
  if (op_set.empty()) return fail("empty op set");
  for (int j = 0; j < g.num_nodes(); ++j) {
    const auto& node = g.nodes[static_cast<size_t>(j)];
    const int max_input = j + 2;
    for (const auto& br : node.branches) {
      if (br.input < 0 || br.input >= max_input) {
        return fail("node " + std::to_string(j) + " references input " +
                    std::to_string(br.input) + ", outside 0.." + std::to_string(max_input - 1));
      }
      if (std::find(op_set.begin(), op_set.end(), br.op) == op_set.end()) {
        return fail("node " + std::to_string(j) + " uses op '" + op_name(br.op) +
                    "' outside the op set");
      }
    }
    if (node.branches[0].input == node.branches[1].input) {
      return fail("node " + std::to_string(j) + " uses the same input twice");
    }
  }
  if (reason) reason->clear();
  return true;
}

Genotype random_genotype(Rng& rng, int n_nodes, const std::vector<OpKind>& op_set) {
  if (n_nodes < 1) throw std::runtime_error("random_genotype: need at least one node");
  if (op_set.empty()) throw std::runtime_error("random_genotype: empty op set");
  Genotype g;
  g.op_set = op_set;
  for (int j = 0; j < n_nodes; ++j) {
    std::vector<int> inputs = rng.sample_without_replacement(j + 2, 2);
    GenotypeNode node{};
    for (int b = 0; b < 2; ++b) {
      node.branches[static_cast<size_t>(b)] = {
          op_set[rng.below(op_set.size())], inputs[static_cast<size_t>(b)]};
    }
    g.nodes.push_back(node);
  }
  g.canonicalize();
  return g;
}

Genotype crblock_genotype() {
  Genotype g;
  g.op_set = all_op_kinds();
  g.nodes = {
      GenotypeNode{{GenotypeBranch{OpKind::conv3x3, 0}, GenotypeBranch{OpKind::zero, 1}}},
      GenotypeNode{{GenotypeBranch{OpKind::zero, 1}, GenotypeBranch{OpKind::conv1x9_9x1, 2}}},
      GenotypeNode{{GenotypeBranch{OpKind::conv1x5_5x1, 0}, GenotypeBranch{OpKind::zero, 1}}},
  };
  g.canonicalize();
  return g;
}

ManualCellResult encode_manual_cell(const std::string& json_text) {
  ManualCellResult r;
  Genotype g;
  try {
    g = Genotype::from_json(json_text);
  } catch (const std::exception& e) {
    r.member = false;
    r.reason = e.what();
    return r;
  }
  std::string reason;
  r.member = genotype_is_member(g, g.num_nodes(), g.op_set, &reason);
  r.reason = reason;
  g.canonicalize();
  r.genotype = std::move(g);
  return r;
}

}  // namespace csinas
