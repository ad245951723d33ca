#include <catch2/catch_amalgamated.hpp>

#include "gprvm/canonical.hpp"
#include "gprvm/eval_cache.hpp"
#include "gprvm/expr.hpp"

using namespace gprvm;

namespace {

Eigen::MatrixXd grid4() {
  Eigen::MatrixXd m(4, 1);
  m << 1.0, 2.0, 3.0, 4.0;
  return m;
}

}  // namespace

TEST_CASE("cold miss computes, stores and counts") {
  EvalCache cache(grid4(), 10);
  CanonicalExpr two_x = canonicalize(Node::make(Op::Add, Node::variable(0), Node::variable(0)));
  auto v = cache.evaluate(two_x);
  REQUIRE(v.has_value());
  CHECK((*v)[3] == 8.0);
  CHECK(cache.size() == 1);
  CHECK(cache.feature_evals() == 1);
  CHECK(cache.node_evals() == static_cast<std::uint64_t>(two_x.node_count) * 4);
}

TEST_CASE("hit returns the identical vector and counts nothing") {
  EvalCache cache(grid4(), 10);
  CanonicalExpr two_x = canonicalize(Node::make(Op::Add, Node::variable(0), Node::variable(0)));
  auto first = cache.evaluate(two_x);
  const std::uint64_t nfes = cache.feature_evals();
  const std::uint64_t nodes = cache.node_evals();
  auto second = cache.evaluate(two_x);
  REQUIRE(second.has_value());
  CHECK((*first == *second));
  CHECK(cache.feature_evals() == nfes);
  CHECK(cache.node_evals() == nodes);
  CHECK(cache.size() == 1);
}

TEST_CASE("cache output matches direct evaluation bitwise") {
  EvalCache cache(grid4(), 100);
  for (int reps = 0; reps < 2; ++reps) {
    for (int k = 1; k <= 20; ++k) {
      NodePtr t = Node::make(Op::Mul, Node::constant(static_cast<double>(k)),
                             Node::make(Op::SqrtAbs, Node::variable(0)));
      CanonicalExpr ce = canonicalize(t);
      auto cached = cache.evaluate(ce);
      auto direct = evaluate(ce.expr, cache.inputs());
      REQUIRE(cached.has_value());
      REQUIRE(direct.has_value());
      for (int i = 0; i < cached->size(); ++i) REQUIRE((*cached)[i] == (*direct)[i]);
    }
  }
}

TEST_CASE("LRU eviction: capacity 2, touch A B C evicts A") {
  EvalCache cache(grid4(), 2);
  CanonicalExpr a = canonicalize(Node::variable(0));
  CanonicalExpr b = canonicalize(Node::make(Op::SqrtAbs, Node::variable(0)));
  CanonicalExpr c = canonicalize(Node::make(Op::Sin, Node::variable(0)));
  cache.evaluate(a);
  cache.evaluate(b);
  cache.evaluate(c);
  CHECK(cache.size() == 2);
  CHECK(cache.feature_evals() == 3);
  cache.evaluate(a);  // A was evicted -> miss again
  CHECK(cache.feature_evals() == 4);
}

TEST_CASE("recency refresh keeps hot entries") {
  EvalCache cache(grid4(), 2);
  CanonicalExpr a = canonicalize(Node::variable(0));
  CanonicalExpr b = canonicalize(Node::make(Op::SqrtAbs, Node::variable(0)));
  CanonicalExpr c = canonicalize(Node::make(Op::Sin, Node::variable(0)));
  cache.evaluate(a);
  cache.evaluate(b);
  cache.evaluate(a);  // refresh A; B is now least recent
  cache.evaluate(c);  // evicts B
  const std::uint64_t nfes = cache.feature_evals();
  cache.evaluate(a);
  CHECK(cache.feature_evals() == nfes);  // A still resident
  cache.evaluate(b);
  CHECK(cache.feature_evals() == nfes + 1);  // B was evicted
}

TEST_CASE("non-finite results are cached as markers") {
  Eigen::MatrixXd tiny(1, 1);
  tiny(0, 0) = 1e-320;
  EvalCache cache(tiny, 10);
  CanonicalExpr inv = canonicalize(Node::make(Op::Recip, Node::variable(0)));
  auto v1 = cache.evaluate(inv);
  CHECK_FALSE(v1.has_value());
  CHECK(cache.feature_evals() == 1);
  auto v2 = cache.evaluate(inv);
  CHECK_FALSE(v2.has_value());
  CHECK(cache.feature_evals() == 1);  // marker hit, no recount
}

TEST_CASE("size never exceeds capacity") {
  EvalCache cache(grid4(), 3);
  for (int k = 0; k < 50; ++k) {
    CanonicalExpr ce = canonicalize(
        Node::make(Op::Add, Node::variable(0), Node::constant(static_cast<double>(k))));
    cache.evaluate(ce);
    REQUIRE(cache.size() <= 3);
  }
}
