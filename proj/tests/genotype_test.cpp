// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "csinas/genotype.hpp"

using namespace csinas;

namespace {

Genotype two_node_sample() {
  Genotype g;
  g.op_set = all_op_kinds();
  GenotypeNode n0;
  n0.branches[0] = {OpKind::conv3x3, 1};
  n0.branches[1] = {OpKind::skip_connection, 0};
  GenotypeNode n1;
  n1.branches[0] = {OpKind::zero, 2};
  n1.branches[1] = {OpKind::sep_conv3x3, 0};
  g.nodes = {n0, n1};
  return g;
}

}  // namespace

TEST_CASE("canonical form sorts branches and fixes the key") {
  Genotype g = two_node_sample();
  Genotype swapped = g;
  std::swap(swapped.nodes[0].branches[0], swapped.nodes[0].branches[1]);
  std::swap(swapped.nodes[1].branches[0], swapped.nodes[1].branches[1]);
  g.canonicalize();
  swapped.canonicalize();
  CHECK(g.key() == swapped.key());
  CHECK(g.nodes[0].branches[0].input == 0);
  CHECK(g.nodes[0].branches[1].input == 1);

  Genotype different = two_node_sample();
  different.nodes[1].branches[1].op = OpKind::conv1x5_5x1;
  different.canonicalize();
  CHECK(different.key() != g.key());
  CHECK(g.num_nodes() == 2);
}

TEST_CASE("JSON round-trip preserves identity and uses op names") {
  Genotype g = two_node_sample();
  g.canonicalize();
  std::string text = g.to_json();
  CHECK(text.find("conv3x3") != std::string::npos);
  CHECK(text.find("skip_connection") != std::string::npos);
  Genotype back = Genotype::from_json(text);
  back.canonicalize();
  CHECK(back.key() == g.key());
  CHECK(back.op_set == g.op_set);
  CHECK(back.version == 1);

  CHECK_THROWS_AS(Genotype::from_json("{"), std::exception);
  CHECK_THROWS_AS(Genotype::from_json("{\"version\": 2}"), std::exception);
}

TEST_CASE("membership accepts the reference cell and rejects malformed ones") {
  Genotype cr = crblock_genotype();
  std::string reason;
  CHECK(genotype_is_member(cr, 3, all_op_kinds(), &reason));
  CHECK(reason.empty());

  // The reference cell wiring: conv3x3 off input 0, a conv1x9_9x1 chained on
  // that node, a parallel conv1x5_5x1 off input 0, zeros elsewhere.
  REQUIRE(cr.num_nodes() == 3);
  CHECK(cr.nodes[0].branches[0].op == OpKind::conv3x3);
  CHECK(cr.nodes[0].branches[0].input == 0);
  CHECK(cr.nodes[0].branches[1].op == OpKind::zero);
  CHECK(cr.nodes[0].branches[1].input == 1);
  CHECK(cr.nodes[1].branches[0].op == OpKind::zero);
  CHECK(cr.nodes[1].branches[0].input == 1);
  CHECK(cr.nodes[1].branches[1].op == OpKind::conv1x9_9x1);
  CHECK(cr.nodes[1].branches[1].input == 2);
  CHECK(cr.nodes[2].branches[0].op == OpKind::conv1x5_5x1);
  CHECK(cr.nodes[2].branches[0].input == 0);
  CHECK(cr.op_set == all_op_kinds());

  // Forward reference: node 0 may only read the two cell inputs.
  Genotype fwd = cr;
  fwd.nodes[0].branches[1].input = 2;
  CHECK(!genotype_is_member(fwd, 3, all_op_kinds(), &reason));
  CHECK(!reason.empty());

  // Input beyond the predecessors available at node 1.
  Genotype far = cr;
  far.nodes[1].branches[1].input = 3;
  CHECK(!genotype_is_member(far, 3, all_op_kinds(), &reason));

  // Branches must use distinct predecessors.
  Genotype dup = cr;
  dup.nodes[0].branches[1].input = 0;
  CHECK(!genotype_is_member(dup, 3, all_op_kinds(), &reason));

  // Op outside the declared vocabulary.
  std::vector<OpKind> small = {OpKind::skip_connection, OpKind::conv3x3};
  CHECK(!genotype_is_member(cr, 3, small, &reason));

  // Node-count mismatch.
  CHECK(!genotype_is_member(cr, 5, all_op_kinds(), &reason));
}

TEST_CASE("random genotypes are uniform-space members that cover the vocabulary") {
  Rng rng(4);
  std::vector<OpKind> ops = all_op_kinds();
  std::set<std::string> keys;
  std::set<int> ops_seen;
  for (int i = 0; i < 200; ++i) {
    Genotype g = random_genotype(rng, 3, ops);
    std::string reason;
    CHECK_MESSAGE(genotype_is_member(g, 3, ops, &reason), reason);
    keys.insert(g.key());
    for (const GenotypeNode& n : g.nodes) {
      for (const GenotypeBranch& b : n.branches) ops_seen.insert(static_cast<int>(b.op));
    }
  }
  CHECK(keys.size() > 100);   // draws spread over the space
  CHECK(ops_seen.size() == 8);

  Rng r1(9), r2(9);
  CHECK(random_genotype(r1, 3, ops).key() == random_genotype(r2, 3, ops).key());
}

TEST_CASE("manual cell encoding reports membership with reasons") {
  ManualCellResult good = encode_manual_cell(crblock_genotype().to_json());
  CHECK(good.genotype.has_value());
  CHECK(good.member);
  CHECK(good.reason.empty());

  Genotype fwd = crblock_genotype();
  fwd.nodes[0].branches[1].input = 2;
  ManualCellResult bad = encode_manual_cell(fwd.to_json());
  CHECK(bad.genotype.has_value());
  CHECK(!bad.member);
  CHECK(!bad.reason.empty());

  std::string unknown = crblock_genotype().to_json();
  const std::string needle = "conv1x9_9x1";
  unknown.replace(unknown.find(needle), needle.size(), "conv7x7res");
  ManualCellResult miss = encode_manual_cell(unknown);
  CHECK(!miss.genotype.has_value());
  CHECK(!miss.member);
  CHECK(miss.reason.find("conv7x7res") != std::string::npos);

  ManualCellResult malformed = encode_manual_cell("not json at all");
  CHECK(!malformed.genotype.has_value());
  CHECK(!malformed.member);
  CHECK(!malformed.reason.empty());
}
