#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gprvm/expr.hpp"

namespace gprvm {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// A canonicalized expression. `key` is the canonical prefix serialization and
// is the dedup identity; `hash` is FNV-1a over `key`. Hash collisions between
// distinct keys are tolerated (lookups compare keys on collision).
struct CanonicalExpr {
  NodePtr expr;
  std::uint64_t hash = 0;
  int node_count = 0;
  std::string key;
};

inline bool operator==(const CanonicalExpr& a, const CanonicalExpr& b) {
  return a.hash == b.hash && a.key == b.key;
}

// Rewrites a tree into a fixed canonical form:
//   - constant folding (protected semantics, so folding matches evaluation)
//   - nested +/- chains flattened into sums of coefficient-carrying terms;
//     like terms collected (a*e + b*e -> (a+b)*e), zero terms dropped
//   - nested * chains flattened; constant factors folded into the
//     coefficient; *0 annihilates
//   - commutative operands sorted by (node_count, hash, key); a folded
//     coefficient other than +-1 is emitted first as a constant factor
//   - double negation eliminated (through sum-term signs)
// No trigonometric, exponential or rational rewriting is attempted.
//
// One instance memoizes by node identity, so enumerating all subtrees of a
// tree canonicalizes each shared node once.
class Canonicalizer {
 public:
  CanonicalExpr canonical(const NodePtr& e) {
    Built b = canon(e);
    return CanonicalExpr{b.node, fnv1a64(*b.key), b.node->node_count(), *b.key};
  }

 private:
  struct Built {
    NodePtr node;
    const std::string* key;  // stable storage in key_
  };

  std::unordered_map<const Node*, Built> memo_;       // raw node -> canonical
  std::unordered_map<const Node*, std::string> key_;  // canonical node -> key

  Built reg(NodePtr n, std::string key) {
    auto [it, inserted] = key_.emplace(n.get(), std::move(key));
    return Built{std::move(n), &it->second};
  }

  Built as_built(const NodePtr& n) {
    auto it = key_.find(n.get());
    if (it != key_.end()) return Built{n, &it->second};
    return reg(n, serialize(n));
  }

  Built bconst(double v) {
    if (v == 0.0) v = 0.0;  // merge -0.0 into +0.0
    std::string k;
    append_constant(k, v);
    return reg(Node::constant(v), std::move(k));
  }

  Built bapply1(Op op, const Built& a) {
    NodePtr n = Node::make(op, a.node);
    std::string k = "(";
    k += op_symbol(op);
    k += ' ';
    k += *a.key;
    k += ')';
    return reg(std::move(n), std::move(k));
  }

  Built bapply2(Op op, const Built& a, const Built& b) {
    NodePtr n = Node::make(op, a.node, b.node);
    std::string k = "(";
    k += op_symbol(op);
    k += ' ';
    k += *a.key;
    k += ' ';
    k += *b.key;
    k += ')';
    return reg(std::move(n), std::move(k));
  }

  Built child_built(const Built& e, int i) { return as_built(e.node->child(i)); }

  struct SortKey {
    int node_count;
    std::uint64_t hash;
    const std::string* key;
    bool operator<(const SortKey& o) const {
      if (node_count != o.node_count) return node_count < o.node_count;
      if (hash != o.hash) return hash < o.hash;
      return *key < *o.key;
    }
  };
  static SortKey sort_key(const Built& b) {
    return SortKey{b.node->node_count(), fnv1a64(*b.key), b.key};
  }
  static void sort_builts(std::vector<Built>& v) {
    std::vector<std::pair<SortKey, std::size_t>> keyed;
    keyed.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) keyed.emplace_back(sort_key(v[i]), i);
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Built> out;
    out.reserve(v.size());
    for (const auto& [k, i] : keyed) out.push_back(v[i]);
    v = std::move(out);
  }

  // Flattens multiplicative structure: constants and negations fold into the
  // coefficient, Mul chains into the factor list.
  void gather_product(const Built& e, double& coef, std::vector<Built>& factors) {
    const Node& n = *e.node;
    switch (n.kind()) {
      case Node::Kind::Const:
        coef *= n.value();
        return;
      case Node::Kind::OpNode:
        if (n.op() == Op::Mul) {
          gather_product(child_built(e, 0), coef, factors);
          gather_product(child_built(e, 1), coef, factors);
          return;
        }
        if (n.op() == Op::Neg) {
          coef = -coef;
          gather_product(child_built(e, 0), coef, factors);
          return;
        }
        [[fallthrough]];
      case Node::Kind::Var:
        factors.push_back(e);
        return;
    }
  }

  struct TermAcc {
    std::vector<double> coef;
    std::vector<Built> core;
    std::unordered_map<std::string_view, std::size_t> index;  // core key -> slot
    double constant = 0.0;
  };

  // Flattens additive structure over canonical children (Add/Sub/Neg spines).
  void gather_sum(const Built& e, double sign, TermAcc& acc) {
    const Node& n = *e.node;
    if (n.kind() == Node::Kind::Const) {
      acc.constant += sign * n.value();
      return;
    }
    if (n.kind() == Node::Kind::OpNode) {
      if (n.op() == Op::Add) {
        gather_sum(child_built(e, 0), sign, acc);
        gather_sum(child_built(e, 1), sign, acc);
        return;
      }
      if (n.op() == Op::Sub) {
        gather_sum(child_built(e, 0), sign, acc);
        gather_sum(child_built(e, 1), -sign, acc);
        return;
      }
      if (n.op() == Op::Neg) {
        gather_sum(child_built(e, 0), -sign, acc);
        return;
      }
    }
    // a term: split into coefficient and coefficient-free core
    double coef = sign;
    std::vector<Built> factors;
    gather_product(e, coef, factors);
    if (factors.empty()) {
      acc.constant += coef;
      return;
    }
    Built core = rebuild_factor_chain(factors);
    auto it = acc.index.find(*core.key);
    if (it != acc.index.end()) {
      acc.coef[it->second] += coef;
    } else {
      acc.index.emplace(*core.key, acc.coef.size());
      acc.coef.push_back(coef);
      acc.core.push_back(core);
    }
  }

  // Sorted left-fold of non-constant factors (no coefficient applied).
  Built rebuild_factor_chain(std::vector<Built>& factors) {
    if (factors.size() == 1) return factors[0];
    sort_builts(factors);
    Built chain = factors[0];
    for (std::size_t i = 1; i < factors.size(); ++i)
      chain = bapply2(Op::Mul, chain, factors[i]);
    return chain;
  }

  Built apply_coefficient(double coef, const Built& core) {
    if (coef == 1.0) return core;
    if (coef == -1.0) return bapply1(Op::Neg, core);
    return bapply2(Op::Mul, bconst(coef), core);
  }

  Built rebuild_sum(TermAcc& acc) {
    std::vector<Built> items;
    items.reserve(acc.coef.size() + 1);
    for (std::size_t i = 0; i < acc.coef.size(); ++i) {
      if (acc.coef[i] == 0.0) continue;  // exact cancellation (e.g. x - x)
      items.push_back(apply_coefficient(acc.coef[i], acc.core[i]));
    }
    if (items.empty()) return bconst(acc.constant);
    if (acc.constant != 0.0) items.push_back(bconst(acc.constant));
    sort_builts(items);
    Built chain = items[0];
    for (std::size_t i = 1; i < items.size(); ++i)
      chain = bapply2(Op::Add, chain, items[i]);
    return chain;
  }

  Built canon(const NodePtr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Built out = canon_uncached(e);
    memo_.emplace(e.get(), out);
    return out;
  }

  Built canon_uncached(const NodePtr& e) {
    const Node& n = *e;
    if (n.kind() == Node::Kind::Var) return as_built(e);
    if (n.kind() == Node::Kind::Const) return bconst(n.value());

    std::vector<Built> ch;
    ch.reserve(static_cast<std::size_t>(n.arity()));
    for (int i = 0; i < n.arity(); ++i) ch.push_back(canon(n.child(i)));

    switch (n.op()) {
      case Op::Add:
      case Op::Sub:
      case Op::Neg: {
        TermAcc acc;
        if (n.op() == Op::Neg) {
          gather_sum(ch[0], -1.0, acc);
        } else {
          gather_sum(ch[0], 1.0, acc);
          gather_sum(ch[1], n.op() == Op::Sub ? -1.0 : 1.0, acc);
        }
        return rebuild_sum(acc);
      }
      case Op::Mul: {
        double coef = 1.0;
        std::vector<Built> factors;
        gather_product(ch[0], coef, factors);
        gather_product(ch[1], coef, factors);
        if (factors.empty() || coef == 0.0) return bconst(coef);
        Built chain = rebuild_factor_chain(factors);
        return apply_coefficient(coef, chain);
      }
      default: {
        bool all_const = true;
        for (const Built& c : ch)
          if (c.node->kind() != Node::Kind::Const) all_const = false;
        if (all_const) {
          double v = n.arity() == 1
                         ? apply_op(n.op(), ch[0].node->value())
                         : apply_op(n.op(), ch[0].node->value(), ch[1].node->value());
          return bconst(v);
        }
        if (n.arity() == 1) return bapply1(n.op(), ch[0]);
        return bapply2(n.op(), ch[0], ch[1]);
      }
    }
  }
};

inline CanonicalExpr canonicalize(const NodePtr& e) {
  Canonicalizer cz;
  return cz.canonical(e);
}

namespace detail {

inline void collect_subtrees(const NodePtr& root, Canonicalizer& cz,
                             std::vector<CanonicalExpr>& out,
                             std::unordered_map<std::uint64_t, std::vector<std::size_t>>& seen) {
  CanonicalExpr ce = cz.canonical(root);
  auto& bucket = seen[ce.hash];
  bool dup = false;
  for (std::size_t idx : bucket)
    if (out[idx].key == ce.key) { dup = true; break; }
  if (!dup) {
    bucket.push_back(out.size());
    out.push_back(std::move(ce));
  }
  const Node& n = *root;
  for (int i = 0; i < n.arity(); ++i) collect_subtrees(n.child(i), cz, out, seen);
}

}  // namespace detail

inline void sort_canonical(std::vector<CanonicalExpr>& v) {
  std::sort(v.begin(), v.end(), [](const CanonicalExpr& a, const CanonicalExpr& b) {
    if (a.node_count != b.node_count) return a.node_count < b.node_count;
    if (a.hash != b.hash) return a.hash < b.hash;
    return a.key < b.key;
  });
}

// All rooted subtrees of `root`, canonicalized, deduplicated by canonical
// identity, in deterministic (node_count, hash, key) order.
inline std::vector<CanonicalExpr> subtrees(const NodePtr& root, Canonicalizer& cz) {
  std::vector<CanonicalExpr> out;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  detail::collect_subtrees(root, cz, out, seen);
  sort_canonical(out);
  return out;
}

inline std::vector<CanonicalExpr> subtrees(const NodePtr& root) {
  Canonicalizer cz;
  return subtrees(root, cz);
}

}  // namespace gprvm
