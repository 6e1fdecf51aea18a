// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "csinas/candidate_ops.hpp"
#include "csinas/rng.hpp"

namespace csinas {

struct GenotypeBranch {
  OpKind op;
  int input;  // 0,1 = external cell inputs; 2+k = inner node k
};

struct GenotypeNode {
  std::array<GenotypeBranch, 2> branches;
};

// A discrete cell: per inner node, two branches on distinct predecessors.
// Canonical form sorts each node's branches by (input, op); comparisons and
// duplicate detection rely on it.
struct Genotype {
  int version = 1;
  std::vector<OpKind> op_set;
  std::vector<GenotypeNode> nodes;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  void canonicalize();
  // Compact stable identity string of the canonical form.
  std::string key() const;
  std::string to_json() const;
  static Genotype from_json(const std::string& text);
};

// Validates membership in the (op_set, num_nodes) cell space: branch count,
// distinct in-range inputs, ops drawn from the set. Fills reason on failure.
bool genotype_is_member(const Genotype& g, int expected_nodes, const std::vector<OpKind>& op_set,
                        std::string* reason = nullptr);

// Uniform draw over the legal cell space: per node an unordered pair of
// distinct predecessors and two independent op choices.
Genotype random_genotype(Rng& rng, int n_nodes, const std::vector<OpKind>& op_set);

// The hand-designed reference cell expressible in the N=3 full-op space:
// conv3x3 from input 0, then conv1x9_9x1 chained on that node, and a parallel
// conv1x5_5x1 from input 0; unused second branches carry zero.
Genotype crblock_genotype();

struct ManualCellResult {
  std::optional<Genotype> genotype;  // absent when op names are unknown
  bool member = false;
  std::string reason;
};

// Parses a genotype description (same JSON schema as Genotype::to_json) and
// reports whether it is a legal member of its declared space.
ManualCellResult encode_manual_cell(const std::string& json_text);

}  // namespace csinas
