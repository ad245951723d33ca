#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "gprvm/gp.hpp"
#include "gprvm/rng.hpp"

using namespace gprvm;

namespace {

GpConfig keijzer_cfg() {
  GpConfig cfg;
  cfg.prims = PrimitiveSet::keijzer();
  return cfg;
}

bool is_full_shape(const NodePtr& t) {
  // full trees have every leaf at the same level
  int min_leaf = t->depth(), max_leaf = 1;
  auto walk = [&](auto&& self, const Node& n, int level) -> void {
    if (n.arity() == 0) {
      min_leaf = std::min(min_leaf, level);
      max_leaf = std::max(max_leaf, level);
      return;
    }
    for (int i = 0; i < n.arity(); ++i) self(self, *n.child(i), level + 1);
  };
  walk(walk, *t, 1);
  return min_leaf == max_leaf;
}

}  // namespace

TEST_CASE("init_population respects size and depth bounds") {
  GpConfig cfg = keijzer_cfg();
  cfg.population_size = 4;
  Rng rng(11ULL);
  Population pop = init_population(cfg, rng);
  REQUIRE(pop.individuals.size() == 4);
  for (const NodePtr& t : pop.individuals) {
    CHECK(t->depth() >= 1);
    CHECK(t->depth() <= cfg.max_depth);
  }
}

TEST_CASE("init_population is deterministic in the seed") {
  GpConfig cfg = keijzer_cfg();
  Rng a(99ULL), b(99ULL);
  Population pa = init_population(cfg, a);
  Population pb = init_population(cfg, b);
  REQUIRE(pa.individuals.size() == pb.individuals.size());
  for (std::size_t i = 0; i < pa.individuals.size(); ++i)
    CHECK(structurally_equal(pa.individuals[i], pb.individuals[i]));
}

TEST_CASE("ramped half-and-half mixes full and grow about evenly") {
  GpConfig cfg = keijzer_cfg();
  cfg.population_size = 1000;
  // mirror the documented sampling order (depth from the ramp, then a fair
  // method coin) to recover which method produced each individual
  Rng mirror(123ULL);
  std::vector<NodePtr> expected;
  int full_count = 0;
  for (int i = 0; i < cfg.population_size; ++i) {
    int depth = cfg.init_depth_min +
                static_cast<int>(mirror.below(
                    static_cast<std::size_t>(cfg.init_depth_max - cfg.init_depth_min + 1)));
    bool full = mirror.uniform() < 0.5;
    if (full) ++full_count;
    expected.push_back(detail::random_tree(cfg.prims, depth, full, mirror));
  }
  Rng rng(123ULL);
  Population pop = init_population(cfg, rng);
  REQUIRE(pop.individuals.size() == expected.size());
  int ragged = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    REQUIRE(structurally_equal(pop.individuals[i], expected[i]));
    if (!is_full_shape(pop.individuals[i])) ++ragged;
  }
  const double ratio = static_cast<double>(full_count) / cfg.population_size;
  CHECK(std::abs(ratio - 0.5) <= 0.05);
  // grow produces ragged trees; full never does
  CHECK(ragged > 0);
  CHECK(ragged < cfg.population_size / 2);
}

TEST_CASE("crossover at the root swaps the parents") {
  // a leaf vs a unary tree share only the root position
  NodePtr a = Node::variable(0);
  NodePtr b = Node::make(Op::SqrtAbs, Node::variable(0));
  Rng rng(7ULL);
  auto [ca, cb] = one_point_crossover(a, b, 15, rng);
  CHECK(structurally_equal(ca, b));
  CHECK(structurally_equal(cb, a));
}

TEST_CASE("crossover of identical parents reproduces them") {
  Rng rng(13ULL);
  GpConfig cfg = keijzer_cfg();
  for (int i = 0; i < 50; ++i) {
    NodePtr t = detail::random_tree(cfg.prims, 5, i % 2 == 0, rng);
    auto [ca, cb] = one_point_crossover(t, t, cfg.max_depth, rng);
    CHECK(structurally_equal(ca, t));
    CHECK(structurally_equal(cb, t));
  }
}

TEST_CASE("crossover offspring never exceed max depth") {
  Rng rng(17ULL);
  GpConfig cfg = keijzer_cfg();
  for (int i = 0; i < 300; ++i) {
    NodePtr a = detail::random_tree(cfg.prims, 2 + static_cast<int>(rng.below(14)), false, rng);
    NodePtr b = detail::random_tree(cfg.prims, 2 + static_cast<int>(rng.below(14)), false, rng);
    auto [ca, cb] = one_point_crossover(a, b, cfg.max_depth, rng);
    REQUIRE(ca->depth() <= cfg.max_depth);
    REQUIRE(cb->depth() <= cfg.max_depth);
  }
}

TEST_CASE("uniform mutation replaces the root of a single-leaf tree") {
  GpConfig cfg = keijzer_cfg();
  Rng rng(21ULL);
  NodePtr leaf = Node::constant(42.0);
  NodePtr out = uniform_mutation(leaf, cfg, rng);
  // the only node is the root, so the result is a fresh subtree
  CHECK(out->depth() <= cfg.mutation_subtree_depth);
  CHECK_FALSE(structurally_equal(out, leaf));
}

TEST_CASE("uniform mutation respects the depth bound") {
  GpConfig cfg = keijzer_cfg();
  Rng rng(23ULL);
  for (int i = 0; i < 300; ++i) {
    NodePtr t = detail::random_tree(cfg.prims, 2 + static_cast<int>(rng.below(14)), false, rng);
    NodePtr out = uniform_mutation(t, cfg, rng);
    REQUIRE(out->depth() <= cfg.max_depth);
  }
}

TEST_CASE("mutation is deterministic in the seed") {
  GpConfig cfg = keijzer_cfg();
  Rng mk(31ULL);
  NodePtr t = detail::random_tree(cfg.prims, 6, false, mk);
  Rng a(55ULL), b(55ULL);
  CHECK(structurally_equal(uniform_mutation(t, cfg, a), uniform_mutation(t, cfg, b)));
}

TEST_CASE("erc mutation resamples exactly one constant") {
  GpConfig cfg = keijzer_cfg();
  NodePtr t = Node::make(Op::Add, Node::variable(0), Node::constant(1.5));
  Rng rng(41ULL);
  NodePtr out = erc_mutation(t, cfg, rng);
  REQUIRE(out->kind() == Node::Kind::OpNode);
  CHECK(out->op() == Op::Add);
  CHECK(out->child(0)->kind() == Node::Kind::Var);
  REQUIRE(out->child(1)->kind() == Node::Kind::Const);
  CHECK(out->child(1)->value() != 1.5);
}

TEST_CASE("erc mutation without constants falls back to uniform mutation") {
  GpConfig cfg = keijzer_cfg();
  NodePtr t = Node::make(Op::Add, Node::variable(0), Node::variable(0));
  Rng a(61ULL), b(61ULL);
  NodePtr via_erc = erc_mutation(t, cfg, a);
  NodePtr via_uniform = uniform_mutation(t, cfg, b);
  CHECK(structurally_equal(via_erc, via_uniform));
}

TEST_CASE("nguyen's constant 1 is not ephemeral") {
  GpConfig cfg;
  cfg.prims = PrimitiveSet::nguyen(1);
  NodePtr t = Node::make(Op::Add, Node::variable(0), Node::constant(1.0));
  Rng a(71ULL), b(71ULL);
  NodePtr via_erc = erc_mutation(t, cfg, a);
  NodePtr via_uniform = uniform_mutation(t, cfg, b);
  CHECK(structurally_equal(via_erc, via_uniform));
}

TEST_CASE("erc resampling follows Normal(0, 5)") {
  GpConfig cfg = keijzer_cfg();
  NodePtr t = Node::constant(0.0);
  Rng rng(81ULL);
  double sum = 0.0, sumsq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    // single-node constant tree: mutation must resample the root constant
    NodePtr out = erc_mutation(t, cfg, rng);
    REQUIRE(out->kind() == Node::Kind::Const);
    sum += out->value();
    sumsq += out->value() * out->value();
  }
  const double mean = sum / n;
  const double sigma = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(mean) < 0.15);
  CHECK(std::abs(sigma - 5.0) < 0.15);
}

TEST_CASE("propose_features dedups to a single leaf") {
  GpConfig cfg = keijzer_cfg();
  cfg.population_size = 4;
  cfg.mutation_prob = 0.0;  // keep the leaves as they are
  Population pop;
  pop.individuals = {Node::variable(0), Node::variable(0), Node::variable(0),
                     Node::variable(0)};
  Rng rng(91ULL);
  auto feats = propose_features(pop, cfg, rng);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0].key == "x");
  CHECK(pop.generation == 1);
}

TEST_CASE("propose_features yields pairwise distinct canonical forms") {
  GpConfig cfg = keijzer_cfg();
  Rng rng(101ULL);
  Population pop = init_population(cfg, rng);
  for (int gen = 0; gen < 10; ++gen) {
    auto feats = propose_features(pop, cfg, rng);
    std::set<std::string> keys;
    std::size_t total_nodes = 0;
    for (const auto& f : feats) keys.insert(f.key);
    REQUIRE(keys.size() == feats.size());
    for (const NodePtr& t : pop.individuals) total_nodes += static_cast<std::size_t>(t->node_count());
    REQUIRE(feats.size() <= total_nodes);
    for (const NodePtr& t : pop.individuals) REQUIRE(t->depth() <= cfg.max_depth);
  }
}

TEST_CASE("propose_features is deterministic in the seed") {
  GpConfig cfg = keijzer_cfg();
  Rng ra(111ULL), rb(111ULL);
  Population pa = init_population(cfg, ra);
  Population pb = init_population(cfg, rb);
  for (int gen = 0; gen < 5; ++gen) {
    auto fa = propose_features(pa, cfg, ra);
    auto fb = propose_features(pb, cfg, rb);
    REQUIRE(fa.size() == fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) REQUIRE(fa[i].key == fb[i].key);
  }
}
