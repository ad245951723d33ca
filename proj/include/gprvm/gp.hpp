#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "gprvm/canonical.hpp"
#include "gprvm/expr.hpp"
#include "gprvm/rng.hpp"

namespace gprvm {

struct Terminal {
  enum class Kind { Variable, Constant, Erc } kind;
  int var_index = 0;   // Variable
  double value = 0.0;  // Constant
};

struct PrimitiveSet {
  std::vector<Op> ops;
  std::vector<Terminal> terminals;
  double erc_mean = 0.0;
  double erc_sigma = 5.0;

  bool has_erc() const {
    for (const Terminal& t : terminals)
      if (t.kind == Terminal::Kind::Erc) return true;
    return false;
  }

  static PrimitiveSet keijzer() {
    PrimitiveSet p;
    p.ops = {Op::Add, Op::Mul, Op::Recip, Op::Neg, Op::SqrtAbs};
    p.terminals = {{Terminal::Kind::Variable, 0, 0.0},
                   {Terminal::Kind::Erc, 0, 0.0}};
    return p;
  }

  static PrimitiveSet nguyen(int dims) {
    if (dims != 1 && dims != 2)
      throw std::invalid_argument("nguyen primitive set supports 1 or 2 inputs");
    PrimitiveSet p;
    p.ops = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sin, Op::Cos, Op::Exp, Op::Log};
    p.terminals = {{Terminal::Kind::Variable, 0, 0.0}};
    if (dims == 2) p.terminals.push_back({Terminal::Kind::Variable, 1, 0.0});
    p.terminals.push_back({Terminal::Kind::Constant, 0, 1.0});
    return p;
  }
};

struct GpConfig {
  int population_size = 8;
  int max_depth = 15;
  double crossover_prob = 1.0;
  double mutation_prob = 1.0;
  double mutation_uniform_weight = 0.9;  // remainder goes to ERC mutation
  int init_depth_min = 2;
  int init_depth_max = 6;
  int mutation_subtree_depth = 3;
  PrimitiveSet prims = PrimitiveSet::keijzer();

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(crossover_prob) || !prob(mutation_prob) || !prob(mutation_uniform_weight))
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (init_depth_min < 1 || init_depth_max < init_depth_min ||
        init_depth_max > max_depth)
      throw std::invalid_argument("invalid initialization depth ramp");
    if (prims.ops.empty() || prims.terminals.empty())
      throw std::invalid_argument("primitive set must have operators and terminals");
  }
};

struct Population {
  std::vector<NodePtr> individuals;
  int generation = 0;
};

namespace detail {

inline NodePtr random_terminal(const PrimitiveSet& prims, Rng& rng) {
  const Terminal& t = prims.terminals[rng.below(prims.terminals.size())];
  switch (t.kind) {
    case Terminal::Kind::Variable: return Node::variable(t.var_index);
    case Terminal::Kind::Constant: return Node::constant(t.value);
    case Terminal::Kind::Erc:
      return Node::constant(rng.normal(prims.erc_mean, prims.erc_sigma));
  }
  return Node::constant(0.0);
}

// depth_left counts nodes on the remaining root-to-leaf path (1 = terminal).
inline NodePtr random_tree(const PrimitiveSet& prims, int depth_left, bool full,
                           Rng& rng) {
  if (depth_left <= 1) return random_terminal(prims, rng);
  if (!full) {
    const double n_term = static_cast<double>(prims.terminals.size());
    const double n_ops = static_cast<double>(prims.ops.size());
    if (rng.uniform() < n_term / (n_term + n_ops))
      return random_terminal(prims, rng);
  }
  Op op = prims.ops[rng.below(prims.ops.size())];
  NodePtr a = random_tree(prims, depth_left - 1, full, rng);
  if (op_arity(op) == 1) return Node::make(op, std::move(a));
  NodePtr b = random_tree(prims, depth_left - 1, full, rng);
  return Node::make(op, std::move(a), std::move(b));
}

inline const Node* node_at_preorder(const NodePtr& root, std::size_t index) {
  const Node* result = nullptr;
  std::size_t counter = 0;
  auto walk = [&](auto&& self, const NodePtr& n) -> void {
    if (result) return;
    if (counter++ == index) { result = n.get(); return; }
    for (int i = 0; i < n->arity(); ++i) self(self, n->child(i));
  };
  walk(walk, root);
  return result;
}

inline NodePtr replace_at_preorder(const NodePtr& root, std::size_t index,
                                   const NodePtr& replacement, std::size_t& counter) {
  if (counter++ == index) return replacement;
  if (root->arity() == 0) return root;
  if (root->arity() == 1) {
    NodePtr a = replace_at_preorder(root->child(0), index, replacement, counter);
    return a == root->child(0) ? root : Node::make(root->op(), std::move(a));
  }
  NodePtr a = replace_at_preorder(root->child(0), index, replacement, counter);
  NodePtr b = replace_at_preorder(root->child(1), index, replacement, counter);
  if (a == root->child(0) && b == root->child(1)) return root;
  return Node::make(root->op(), std::move(a), std::move(b));
}

inline NodePtr subtree_at_path(const NodePtr& root, const std::vector<int>& path) {
  NodePtr n = root;
  for (int step : path) n = n->child(step);
  return n;
}

inline NodePtr replace_at_path(const NodePtr& root, const std::vector<int>& path,
                               std::size_t depth, const NodePtr& replacement) {
  if (depth == path.size()) return replacement;
  int step = path[depth];
  if (root->arity() == 1)
    return Node::make(root->op(),
                      replace_at_path(root->child(0), path, depth + 1, replacement));
  NodePtr a = root->child(0);
  NodePtr b = root->child(1);
  if (step == 0)
    a = replace_at_path(a, path, depth + 1, replacement);
  else
    b = replace_at_path(b, path, depth + 1, replacement);
  return Node::make(root->op(), std::move(a), std::move(b));
}

// Aligned positions of the common region: the root, plus positions whose
// parents are common and have equal arity in both trees.
inline void common_region(const Node& a, const Node& b, std::vector<int>& path,
                          std::vector<std::vector<int>>& out) {
  out.push_back(path);
  if (a.arity() != b.arity()) return;
  for (int i = 0; i < a.arity(); ++i) {
    path.push_back(i);
    common_region(*a.child(i), *b.child(i), path, out);
    path.pop_back();
  }
}

}  // namespace detail

// Ramped half-and-half over the configured depth ramp; grow/full chosen by
// coin flip per individual.
inline Population init_population(const GpConfig& cfg, Rng& rng) {
  cfg.validate();
  Population pop;
  pop.individuals.reserve(static_cast<std::size_t>(cfg.population_size));
  const int span = cfg.init_depth_max - cfg.init_depth_min + 1;
  for (int i = 0; i < cfg.population_size; ++i) {
    int depth = cfg.init_depth_min + static_cast<int>(rng.below(static_cast<std::size_t>(span)));
    bool full = rng.uniform() < 0.5;
    pop.individuals.push_back(detail::random_tree(cfg.prims, depth, full, rng));
  }
  return pop;
}

// One-point crossover over the common region: a single aligned position is
// chosen uniformly and the subtrees rooted there are exchanged. Offspring
// exceeding max_depth are replaced by the parent that provided their root.
inline std::pair<NodePtr, NodePtr> one_point_crossover(const NodePtr& a,
                                                       const NodePtr& b,
                                                       int max_depth, Rng& rng) {
  std::vector<std::vector<int>> points;
  std::vector<int> path;
  detail::common_region(*a, *b, path, points);
  const std::vector<int>& p = points[rng.below(points.size())];
  NodePtr sub_a = detail::subtree_at_path(a, p);
  NodePtr sub_b = detail::subtree_at_path(b, p);
  NodePtr child_a = detail::replace_at_path(a, p, 0, sub_b);
  NodePtr child_b = detail::replace_at_path(b, p, 0, sub_a);
  if (child_a->depth() > max_depth) child_a = a;
  if (child_b->depth() > max_depth) child_b = b;
  return {std::move(child_a), std::move(child_b)};
}

// Replaces a uniformly chosen node's subtree with a fresh grow subtree of
// bounded depth; over-depth results fall back to the parent.
inline NodePtr uniform_mutation(const NodePtr& t, const GpConfig& cfg, Rng& rng) {
  std::size_t index = rng.below(static_cast<std::size_t>(t->node_count()));
  NodePtr repl = detail::random_tree(cfg.prims, cfg.mutation_subtree_depth,
                                     /*full=*/false, rng);
  std::size_t counter = 0;
  NodePtr out = detail::replace_at_preorder(t, index, repl, counter);
  if (out->depth() > cfg.max_depth) return t;
  return out;
}

// Resamples one ephemeral constant from the terminal distribution. Trees
// without resampleable constants fall back to uniform mutation (the nguyen
// set's fixed constant 1 is not ephemeral).
inline NodePtr erc_mutation(const NodePtr& t, const GpConfig& cfg, Rng& rng) {
  if (cfg.prims.has_erc()) {
    std::vector<std::size_t> const_indices;
    std::size_t counter = 0;
    auto walk = [&](auto&& self, const NodePtr& n) -> void {
      if (n->kind() == Node::Kind::Const) const_indices.push_back(counter);
      ++counter;
      for (int i = 0; i < n->arity(); ++i) self(self, n->child(i));
    };
    walk(walk, t);
    if (!const_indices.empty()) {
      std::size_t index = const_indices[rng.below(const_indices.size())];
      NodePtr repl = Node::constant(rng.normal(cfg.prims.erc_mean, cfg.prims.erc_sigma));
      std::size_t c = 0;
      return detail::replace_at_preorder(t, index, repl, c);
    }
  }
  return uniform_mutation(t, cfg, rng);
}

// Canonical dedup'd union of all rooted subtrees over a set of trees.
inline std::vector<CanonicalExpr> subtree_pool(const std::vector<NodePtr>& trees) {
  Canonicalizer cz;
  std::vector<CanonicalExpr> out;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  for (const NodePtr& t : trees) detail::collect_subtrees(t, cz, out, seen);
  sort_canonical(out);
  return out;
}

// One generation of variation: random pairing without replacement, crossover
// and mutation at the configured probabilities, population replaced by the
// offspring. Returns the union of canonical subtrees over all offspring,
// deduplicated, in deterministic order. Selection pressure lives entirely in
// the learner, not here.
inline std::vector<CanonicalExpr> propose_features(Population& pop,
                                                   const GpConfig& cfg, Rng& rng) {
  const std::size_t n = pop.individuals.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.below(i)]);

  std::vector<NodePtr> offspring;
  offspring.reserve(n);
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    const NodePtr& a = pop.individuals[perm[k]];
    const NodePtr& b = pop.individuals[perm[k + 1]];
    if (rng.uniform() < cfg.crossover_prob) {
      auto [ca, cb] = one_point_crossover(a, b, cfg.max_depth, rng);
      offspring.push_back(std::move(ca));
      offspring.push_back(std::move(cb));
    } else {
      offspring.push_back(a);
      offspring.push_back(b);
    }
  }
  if (n % 2 == 1) offspring.push_back(pop.individuals[perm[n - 1]]);

  for (NodePtr& child : offspring) {
    if (rng.uniform() < cfg.mutation_prob) {
      child = rng.uniform() < cfg.mutation_uniform_weight
                  ? uniform_mutation(child, cfg, rng)
                  : erc_mutation(child, cfg, rng);
    }
  }

  pop.individuals = offspring;
  ++pop.generation;

  return subtree_pool(pop.individuals);
}

}  // namespace gprvm
