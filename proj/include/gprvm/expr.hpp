#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gprvm {

enum class Op : std::uint8_t {
  Add, Sub, Mul, Div, Neg, Recip, SqrtAbs, Sin, Cos, Exp, Log
};

struct OpInfo {
  Op op;
  const char* symbol;
  int arity;
};

inline constexpr std::array<OpInfo, 11> kOpTable{{
    {Op::Add, "+", 2},
    {Op::Sub, "-", 2},
    {Op::Mul, "*", 2},
    {Op::Div, "/", 2},
    {Op::Neg, "neg", 1},
    {Op::Recip, "inv", 1},
    {Op::SqrtAbs, "sqrt", 1},  // evaluates sqrt(|n|)
    {Op::Sin, "sin", 1},
    {Op::Cos, "cos", 1},
    {Op::Exp, "exp", 1},
    {Op::Log, "log", 1},  // evaluates ln(|n|), 0 near n = 0
}};

inline const OpInfo& op_info(Op op) {
  return kOpTable[static_cast<std::size_t>(op)];
}
inline int op_arity(Op op) { return op_info(op).arity; }
inline const char* op_symbol(Op op) { return op_info(op).symbol; }

// Protected primitives: every operator is total over the reals so that tree
// evaluation is closed and never raises.
inline double protected_div(double a, double b) {
  return std::abs(b) < 1e-12 ? 1.0 : a / b;
}
inline double protected_recip(double a) { return a == 0.0 ? 1.0 : 1.0 / a; }
inline double protected_log(double a) {
  return std::abs(a) < 1e-12 ? 0.0 : std::log(std::abs(a));
}
inline double clamped_exp(double a) {
  return std::exp(a < -60.0 ? -60.0 : (a > 60.0 ? 60.0 : a));
}
inline double sqrt_abs(double a) { return std::sqrt(std::abs(a)); }

inline double apply_op(Op op, double a, double b = 0.0) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return protected_div(a, b);
    case Op::Neg: return -a;
    case Op::Recip: return protected_recip(a);
    case Op::SqrtAbs: return sqrt_abs(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return clamped_exp(a);
    case Op::Log: return protected_log(a);
  }
  return 0.0;
}

class Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable expression node; trees share subtrees freely. node_count and
// depth are materialized at construction (depth of a single node is 1).
class Node {
 public:
  enum class Kind : std::uint8_t { OpNode, Var, Const };

  static NodePtr variable(int index) {
    if (index < 0 || index > 1)
      throw std::invalid_argument("variable index must be 0 (x) or 1 (y)");
    Node n;
    n.kind_ = Kind::Var;
    n.var_index_ = index;
    return std::make_shared<const Node>(std::move(n));
  }

  static NodePtr constant(double value) {
    Node n;
    n.kind_ = Kind::Const;
    n.value_ = value;
    return std::make_shared<const Node>(std::move(n));
  }

  static NodePtr make(Op op, NodePtr a) {
    if (op_arity(op) != 1) throw std::invalid_argument("arity mismatch");
    Node n;
    n.kind_ = Kind::OpNode;
    n.op_ = op;
    n.node_count_ = 1 + a->node_count_;
    n.depth_ = 1 + a->depth_;
    n.children_[0] = std::move(a);
    return std::make_shared<const Node>(std::move(n));
  }

  static NodePtr make(Op op, NodePtr a, NodePtr b) {
    if (op_arity(op) != 2) throw std::invalid_argument("arity mismatch");
    Node n;
    n.kind_ = Kind::OpNode;
    n.op_ = op;
    n.node_count_ = 1 + a->node_count_ + b->node_count_;
    n.depth_ = 1 + std::max(a->depth_, b->depth_);
    n.children_[0] = std::move(a);
    n.children_[1] = std::move(b);
    return std::make_shared<const Node>(std::move(n));
  }

  Kind kind() const { return kind_; }
  Op op() const { return op_; }
  int var_index() const { return var_index_; }
  double value() const { return value_; }
  int arity() const { return kind_ == Kind::OpNode ? op_arity(op_) : 0; }
  const NodePtr& child(int i) const { return children_[i]; }
  int node_count() const { return node_count_; }
  int depth() const { return depth_; }

 private:
  Kind kind_ = Kind::Const;
  Op op_ = Op::Add;
  int var_index_ = -1;
  double value_ = 0.0;
  std::array<NodePtr, 2> children_{};
  int node_count_ = 1;
  int depth_ = 1;
};

using ExpressionTree = NodePtr;

inline bool structurally_equal(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Node::Kind::Var: return a.var_index() == b.var_index();
    case Node::Kind::Const: {
      // bit equality so that 0.0 / -0.0 and NaN payloads stay distinct
      std::uint64_t x, y;
      double va = a.value(), vb = b.value();
      std::memcpy(&x, &va, 8);
      std::memcpy(&y, &vb, 8);
      return x == y;
    }
    case Node::Kind::OpNode:
      if (a.op() != b.op()) return false;
      for (int i = 0; i < a.arity(); ++i)
        if (!structurally_equal(*a.child(i), *b.child(i))) return false;
      return true;
  }
  return false;
}
inline bool structurally_equal(const NodePtr& a, const NodePtr& b) {
  return structurally_equal(*a, *b);
}

// ---------------------------------------------------------------------------
// Evaluation over an N x D input matrix (columns are input dimensions).

inline Eigen::ArrayXd eval_rows(const Node& n, const Eigen::MatrixXd& inputs) {
  switch (n.kind()) {
    case Node::Kind::Var:
      if (n.var_index() >= inputs.cols())
        throw std::out_of_range("expression uses an input dimension the dataset lacks");
      return inputs.col(n.var_index()).array();
    case Node::Kind::Const:
      return Eigen::ArrayXd::Constant(inputs.rows(), n.value());
    case Node::Kind::OpNode: {
      Eigen::ArrayXd a = eval_rows(*n.child(0), inputs);
      if (n.arity() == 1) {
        const Op op = n.op();
        return a.unaryExpr([op](double x) { return apply_op(op, x); });
      }
      Eigen::ArrayXd b = eval_rows(*n.child(1), inputs);
      const Op op = n.op();
      return a.binaryExpr(b, [op](double x, double y) { return apply_op(op, x, y); });
    }
  }
  return Eigen::ArrayXd::Zero(inputs.rows());
}

// Returns nullopt when any entry is non-finite after protection; such
// features must be discarded by the caller.
inline std::optional<Eigen::VectorXd> evaluate(const NodePtr& e,
                                               const Eigen::MatrixXd& inputs) {
  Eigen::ArrayXd v = eval_rows(*e, inputs);
  if (!v.allFinite()) return std::nullopt;
  return Eigen::VectorXd(std::move(v));
}

// ---------------------------------------------------------------------------
// Prefix s-expression grammar:
//   expr := "(" symbol expr* ")" | variable | number
// variables are "x" and "y"; numbers are decimal literals printed with 17
// significant digits so constants round-trip exactly.

inline void append_constant(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void serialize_into(const Node& n, std::string& out) {
  switch (n.kind()) {
    case Node::Kind::Var:
      out += (n.var_index() == 0 ? 'x' : 'y');
      return;
    case Node::Kind::Const:
      append_constant(out, n.value());
      return;
    case Node::Kind::OpNode:
      out += '(';
      out += op_symbol(n.op());
      for (int i = 0; i < n.arity(); ++i) {
        out += ' ';
        serialize_into(*n.child(i), out);
      }
      out += ')';
      return;
  }
}

inline std::string serialize(const NodePtr& e) {
  std::string out;
  out.reserve(static_cast<std::size_t>(e->node_count()) * 6);
  serialize_into(*e, out);
  return out;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t token_index, const std::string& what)
      : std::runtime_error("parse error at token " + std::to_string(token_index) +
                           ": " + what),
        token_index_(token_index) {}
  std::size_t token_index() const { return token_index_; }

 private:
  std::size_t token_index_;
};

namespace detail {

inline std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else if (c == '(' || c == ')') {
      tokens.push_back(s.substr(i, 1));
      ++i;
    } else {
      std::size_t j = i;
      while (j < s.size() && s[j] != '(' && s[j] != ')' && s[j] != ' ' &&
             s[j] != '\t' && s[j] != '\n' && s[j] != '\r')
        ++j;
      tokens.push_back(s.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

inline bool parse_number(std::string_view tok, double& out) {
  std::string buf(tok);
  const char* begin = buf.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + buf.size() && end != begin;
}

inline NodePtr parse_tokens(const std::vector<std::string_view>& tokens,
                            std::size_t& pos, int nesting) {
  if (nesting > 10000) throw ParseError(pos, "nesting too deep");
  if (pos >= tokens.size()) throw ParseError(pos, "unexpected end of input");
  std::string_view tok = tokens[pos];
  if (tok == ")") throw ParseError(pos, "unexpected ')'");
  if (tok == "(") {
    std::size_t open = pos++;
    if (pos >= tokens.size()) throw ParseError(pos, "unexpected end of input");
    std::string_view sym = tokens[pos];
    const OpInfo* info = nullptr;
    for (const auto& oi : kOpTable)
      if (sym == oi.symbol) { info = &oi; break; }
    if (info == nullptr)
      throw ParseError(pos, "unknown symbol '" + std::string(sym) + "'");
    ++pos;
    std::vector<NodePtr> args;
    while (pos < tokens.size() && tokens[pos] != ")")
      args.push_back(parse_tokens(tokens, pos, nesting + 1));
    if (pos >= tokens.size()) throw ParseError(pos, "missing ')'");
    ++pos;  // consume ')'
    if (static_cast<int>(args.size()) != info->arity)
      throw ParseError(open, std::string("operator '") + info->symbol +
                                 "' expects " + std::to_string(info->arity) +
                                 " argument(s), got " + std::to_string(args.size()));
    if (info->arity == 1) return Node::make(info->op, std::move(args[0]));
    return Node::make(info->op, std::move(args[0]), std::move(args[1]));
  }
  // atom
  std::size_t at = pos++;
  if (tok == "x") return Node::variable(0);
  if (tok == "y") return Node::variable(1);
  double v;
  if (parse_number(tok, v)) return Node::constant(v);
  throw ParseError(at, "unknown symbol '" + std::string(tok) + "'");
}

}  // namespace detail

inline NodePtr parse(std::string_view text) {
  auto tokens = detail::tokenize(text);
  if (tokens.empty()) throw ParseError(0, "empty input");
  std::size_t pos = 0;
  NodePtr e = detail::parse_tokens(tokens, pos, 0);
  if (pos != tokens.size())
    throw ParseError(pos, "trailing input after expression");
  return e;
}

}  // namespace gprvm
