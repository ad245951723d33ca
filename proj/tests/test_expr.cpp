#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gprvm/expr.hpp"
#include "gprvm/gp.hpp"
#include "gprvm/rng.hpp"

using namespace gprvm;

namespace {

Eigen::MatrixXd one_point(double x) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = x;
  return m;
}

double eval_at(const NodePtr& e, double x) {
  auto v = evaluate(e, one_point(x));
  REQUIRE(v.has_value());
  return (*v)[0];
}

}  // namespace

TEST_CASE("identity terminal evaluates to its input") {
  NodePtr x = Node::variable(0);
  CHECK(eval_at(x, 3.0) == 3.0);
}

TEST_CASE("sqrt primitive takes the absolute value") {
  NodePtr e = Node::make(Op::SqrtAbs, Node::variable(0));
  CHECK(eval_at(e, 4.0) == 2.0);
  CHECK(eval_at(e, -4.0) == 2.0);
}

TEST_CASE("protected operators are total") {
  NodePtr x = Node::variable(0);
  SECTION("reciprocal of zero is 1") {
    NodePtr e = Node::make(Op::Recip, x);
    CHECK(eval_at(e, 0.0) == 1.0);
    CHECK(eval_at(e, 2.0) == 0.5);
  }
  SECTION("division by a vanishing denominator is 1") {
    NodePtr e = Node::make(Op::Div, Node::constant(5.0), x);
    CHECK(eval_at(e, 0.0) == 1.0);
    CHECK(eval_at(e, 1e-13) == 1.0);
    CHECK(eval_at(e, 2.0) == 2.5);
  }
  SECTION("log is ln|n| with a guard at zero") {
    NodePtr e = Node::make(Op::Log, x);
    CHECK(eval_at(e, 0.0) == 0.0);
    CHECK(eval_at(e, 1e-13) == 0.0);
    CHECK(eval_at(e, std::exp(1.0)) == Catch::Approx(1.0));
    CHECK(eval_at(e, -std::exp(1.0)) == Catch::Approx(1.0));
  }
  SECTION("exp clamps its argument") {
    NodePtr e = Node::make(Op::Exp, x);
    CHECK(eval_at(e, 100.0) == std::exp(60.0));
    CHECK(eval_at(e, -100.0) == std::exp(-60.0));
  }
}

TEST_CASE("non-finite outputs are flagged for rejection") {
  // 1/x at tiny x overflows to inf
  NodePtr e = Node::make(Op::Recip, Node::variable(0));
  auto v = evaluate(e, one_point(1e-320));
  CHECK_FALSE(v.has_value());
}

TEST_CASE("evaluation rejects variables beyond the input dimensionality") {
  NodePtr e = Node::variable(1);
  CHECK_THROWS_AS(evaluate(e, one_point(1.0)), std::out_of_range);
}

TEST_CASE("serialization uses the prefix grammar") {
  NodePtr e = Node::make(Op::Add, Node::variable(0),
                         Node::make(Op::Sin, Node::variable(0)));
  CHECK(serialize(e) == "(+ x (sin x))");
}

TEST_CASE("parse reports unknown symbols with their token index") {
  try {
    parse("(add x x)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.token_index() == 1);
  }
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("(+ x"), ParseError);
  CHECK_THROWS_AS(parse("(+ x x) y"), ParseError);
  CHECK_THROWS_AS(parse("(sin x y)"), ParseError);
  CHECK_THROWS_AS(parse("z"), ParseError);
}

TEST_CASE("round-trip: parse(serialize(e)) is structurally identical") {
  GpConfig cfg;
  cfg.prims = PrimitiveSet::keijzer();
  Rng rng(20240917ULL);
  for (int i = 0; i < 200; ++i) {
    NodePtr t = detail::random_tree(cfg.prims, 15, i % 2 == 0, rng);
    NodePtr back = parse(serialize(t));
    CHECK(structurally_equal(t, back));
  }
  GpConfig ng;
  ng.prims = PrimitiveSet::nguyen(2);
  for (int i = 0; i < 200; ++i) {
    NodePtr t = detail::random_tree(ng.prims, 15, i % 2 == 0, rng);
    NodePtr back = parse(serialize(t));
    CHECK(structurally_equal(t, back));
  }
}

TEST_CASE("constants round-trip at 17 significant digits") {
  NodePtr c = Node::constant(0.1234567890123456789);
  NodePtr back = parse(serialize(c));
  CHECK(back->value() == c->value());
  NodePtr neg = Node::constant(-3.5);
  CHECK(parse(serialize(neg))->value() == -3.5);
}
